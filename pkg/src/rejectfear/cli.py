"""Command-line entry point.

Each subcommand computes a ``Result``: optional summary scalars plus a list
of uniform rows.  Emitters render it as an aligned text table, CSV (reals at
9 significant digits) or JSON.  Option values resolve as command-line flag,
then ``--config`` file entry, then built-in default.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import __version__, bounds, overshoot, reference
from .errors import DomainError, ResourceError, SolverError
from .model import BiasParams, Portfolio, perceived_utility, true_payoff
from .montecarlo import SimConfig, simulate
from .solver import SolveConfig, SolveReport, oracle_solve, solve
from .verify import run_suite

SIG_DIGITS = 9
EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3


@dataclass
class Result:
    rows: list[dict[str, Any]]
    summary: dict[str, Any] = field(default_factory=dict)
    failed: bool = False


# ---------------------------------------------------------------- formatting

def fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), f".{SIG_DIGITS}g")
    if value is None:
        return ""
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return float(format(v, f".{SIG_DIGITS}g")) if math.isfinite(v) else str(v)
    if isinstance(value, np.integer):
        return int(value)
    return value


def render_csv(result: Result) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if result.rows:
        header = list(result.rows[0])
        writer.writerow(header)
        for row in result.rows:
            writer.writerow(fmt(row[h]) for h in header)
    if result.summary:
        if result.rows:
            buf.write("\n")
        writer.writerow(["key", "value"])
        for key, value in result.summary.items():
            writer.writerow([key, fmt(value)])
    return buf.getvalue()


def render_json(command: str, result: Result) -> str:
    doc = {
        "command": command,
        "summary": {k: _json_value(v) for k, v in result.summary.items()},
        "rows": [{k: _json_value(v) for k, v in row.items()} for row in result.rows],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def render_table(result: Result) -> str:
    lines = []
    if result.summary:
        width = max(len(k) for k in result.summary)
        lines += [f"{k.ljust(width)}  {fmt(v)}" for k, v in result.summary.items()]
    if result.rows:
        if lines:
            lines.append("")
        header = list(result.rows[0])
        cells = [[fmt(row[h]) for h in header] for row in result.rows]
        widths = [max(len(h), *(len(c[j]) for c in cells)) for j, h in enumerate(header)]
        lines.append("  ".join(h.rjust(w) for h, w in zip(header, widths)))
        lines += ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def render(command: str, result: Result, style: str) -> str:
    if style == "csv":
        return render_csv(result)
    if style == "json":
        return render_json(command, result)
    return render_table(result)


# ---------------------------------------------------------------- option types

def u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from exc


def choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise argparse.ArgumentTypeError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    parse.__name__ = "choice"
    return parse


# dest -> (converter, default); a default of None means "absent" or "derived later"
COMMON_OPTIONS: dict[str, tuple[Callable, Any]] = {
    "format": (choice("table", "csv", "json"), "table"),
    "out": (str, None),
    "config": (str, None),
    "seed": (u64, 0),
}

COMMAND_OPTIONS: dict[str, dict[str, tuple[Callable, Any]]] = {
    "solve": {"gamma": (float, 0.1), "k": (int, 5)},
    "table": {"which": (choice("freezing", "payoff"), "payoff"), "gamma": (float_list, None),
              "k_max": (int, None)},
    "figure": {"which": (choice("portfolio_line", "deltas", "h_curve", "m_curve", "x1_vs_gamma"), "deltas"),
               "gamma": (float_list, None), "k": (int, None), "points": (int, 200), "gamma_max": (float, None)},
    "verify": {"suite": (choice("foc", "bounds", "oracle", "montecarlo", "overshoot", "all"), "all"),
               "samples": (int, 10_000_000)},
    "oracle": {"gamma": (float, 0.1), "k": (int, 2), "resolution": (float, 1e-3)},
    "mc": {"gamma": (float, 0.1), "k": (int, 5), "tau": (float, None), "lam": (float, None),
           "samples": (int, 1_000_000), "streams": (int, 8)},
    "bounds": {"gamma": (float, 0.1), "k": (int, 10), "c": (float, None)},
    "overshoot": {"k": (int, 5), "gamma": (float_list, None), "gamma_max": (float, overshoot.K5_TOP_GAMMA),
                  "points": (int, 20), "a": (float, None), "b": (float, None)},
}

HELP = {
    "solve": "optimal portfolio for one (gamma, k)",
    "table": "reproduce the freezing or payoff reference table",
    "figure": "point series for a figure",
    "verify": "run an invariant suite; nonzero exit on any violation",
    "oracle": "brute-force grid optimum for small k",
    "mc": "Monte Carlo estimate of perceived utility and payoff",
    "bounds": "evaluate every closed-form bound at gamma",
    "overshoot": "top/bottom school versus k/(k+1) and 1/(k+1) across gamma",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    for dest, (conv, _) in COMMON_OPTIONS.items():
        common.add_argument(f"--{dest}", dest=dest, type=conv, default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="rejectfear", parents=[common],
                                     description="Optimal school portfolios under fear of rejection.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, options in COMMAND_OPTIONS.items():
        p = sub.add_parser(name, parents=[common], help=HELP[name])
        for dest, (conv, _) in options.items():
            p.add_argument(f"--{dest.replace('_', '-')}", dest=dest, type=conv, default=argparse.SUPPRESS)
    return parser


def read_config(path: str) -> dict[str, str]:
    """``key=value`` lines; ``#`` starts a comment; dashes in keys map to underscores."""
    values = {}
    for n, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{n}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def resolve_options(ns: argparse.Namespace) -> dict[str, Any]:
    flags = vars(ns)
    command = flags["command"]
    options = {**COMMON_OPTIONS, **COMMAND_OPTIONS[command]}
    resolved = {dest: default for dest, (_, default) in options.items()}
    config_path = flags.get("config")
    if config_path:
        for key, text in read_config(config_path).items():
            if key not in options or key == "config":
                raise DomainError(f"unknown config key {key!r} for command {command!r}")
            try:
                resolved[key] = options[key][0](text)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise DomainError(f"config key {key!r}: {exc}") from exc
    resolved.update({k: v for k, v in flags.items() if k != "command"})
    resolved["config"] = config_path
    return resolved


# ---------------------------------------------------------------- commands

def _portfolio_rows(report: SolveReport) -> list[dict[str, Any]]:
    residuals = report.residuals
    return [
        {"i": i, "x": x, "delta": d, "residual": r}
        for i, (x, d, r) in enumerate(zip(report.portfolio, report.gaps, residuals), start=1)
    ]


def _report_summary(report: SolveReport) -> dict[str, Any]:
    return {
        "gamma": report.gamma,
        "k": report.k,
        "method": report.method,
        "perceived_utility": report.perceived,
        "true_payoff": report.payoff,
        "max_residual": report.max_residual,
        "boundary_error": report.boundary_error,
        "critical_points": report.critical_points,
    }


def cmd_solve(opts: dict[str, Any]) -> Result:
    report = solve(opts["k"], opts["gamma"])
    return Result(_portfolio_rows(report), _report_summary(report))


def cmd_oracle(opts: dict[str, Any]) -> Result:
    report = oracle_solve(opts["k"], opts["gamma"], opts["resolution"])
    summary = _report_summary(report)
    summary["resolution"] = opts["resolution"]
    return Result(_portfolio_rows(report), summary)


def cmd_table(opts: dict[str, Any]) -> Result:
    which = opts["which"]
    if which == "freezing":
        gammas = opts["gamma"] or list(reference.FREEZING_TABLE)
        k_max = opts["k_max"] or 14
        rows = []
        for gamma in gammas:
            printed = reference.FREEZING_TABLE.get(gamma, {})
            for k in range(1, k_max + 1):
                if printed and k not in printed:
                    continue
                xs = solve(k, gamma).portfolio
                ref = printed.get(k, ())
                for i, x in enumerate(xs, start=1):
                    rows.append({"gamma": gamma, "k": k, "i": i, "x": x,
                                 "reference": ref[i - 1] if i <= len(ref) else None})
        return Result(rows)

    gammas = opts["gamma"] or list(reference.PAYOFF_GAMMAS)
    k_max = opts["k_max"] or 100
    rows = []
    for k in (k for k in reference.PAYOFF_KS if k <= k_max):
        row: dict[str, Any] = {"k": k, "unbiased": k / (2.0 * (k + 1))}
        for gamma in gammas:
            row[f"gamma={fmt(float(gamma))}"] = true_payoff(solve(k, gamma).portfolio)
        rows.append(row)
    return Result(rows)


def _figure_gamma(opts: dict[str, Any], default: float) -> float:
    return opts["gamma"][0] if opts["gamma"] else default


def cmd_figure(opts: dict[str, Any]) -> Result:
    which, points = opts["which"], opts["points"]
    if points < 2:
        raise DomainError(f"points must be at least 2, got {points}")
    if which in ("portfolio_line", "deltas"):
        gamma = _figure_gamma(opts, 0.1)
        k = opts["k"] or (100 if which == "portfolio_line" else 25)
        report = solve(k, gamma)
        if which == "portfolio_line":
            return Result([{"i": i, "x": x} for i, x in enumerate(report.portfolio, start=1)])
        return Result([{"i": i, "x": x, "delta": d}
                       for i, (x, d) in enumerate(zip(report.portfolio, report.gaps), start=1)])
    if which == "h_curve":
        top = opts["gamma_max"] or 4.0
        return Result([{"gamma": g, "h": bounds.h_of_gamma(g)} for g in np.linspace(top / points, top, points)])
    if which == "m_curve":
        gammas = opts["gamma"] or [0.05, 0.1, 0.5, 1.0]
        cs = np.linspace(bounds.TWO_THIRDS / (points + 1), bounds.TWO_THIRDS * points / (points + 1), points)
        return Result([{"gamma": g, "c": c, "m": bounds.m_of_gamma_c(g, c)} for g in gammas for c in cs])
    # x1_vs_gamma
    k = opts["k"] or 5
    top = opts["gamma_max"] or 0.03
    rows = []
    for row in overshoot.global_overshoot_scan(k, np.linspace(top / points, top, points)):
        rows.append({"gamma": row.gamma, "x1": row.x_top, "rational": k / (k + 1),
                     "x1_lower_bound": row.top_lower_bound})
    return Result(rows)


def cmd_verify(opts: dict[str, Any]) -> Result:
    checks = run_suite(opts["suite"], seed=opts["seed"], samples=opts["samples"])
    rows = [{"check": c.name, "passed": c.passed, "margin": c.margin, "detail": c.detail} for c in checks]
    failed = sum(not c.passed for c in checks)
    return Result(rows, {"suite": opts["suite"], "checks": len(checks), "failed": failed}, failed=failed > 0)


def cmd_mc(opts: dict[str, Any]) -> Result:
    gamma = opts["gamma"]
    tau, lam = opts["tau"], opts["lam"]
    if tau is None and lam is None:
        bias = BiasParams.from_gamma(gamma)
    elif tau is not None and lam is not None:
        bias = BiasParams.from_tau_lambda(tau, lam)
    elif tau is not None:
        bias = BiasParams.from_tau_lambda(tau, 1.0 + gamma / tau if tau > 0 else 1.0)
    else:
        if lam <= 1.0:
            raise DomainError("lambda must exceed 1 to derive tau from gamma")
        bias = BiasParams.from_tau_lambda(gamma / (lam - 1.0), lam)
    portfolio = solve(opts["k"], bias.gamma).portfolio
    res = simulate(portfolio, bias, SimConfig(samples=opts["samples"], seed=opts["seed"],
                                              stream_count=opts["streams"]))
    exact_u, exact_p = perceived_utility(portfolio, bias), true_payoff(portfolio)
    summary = {
        "gamma": bias.gamma, "tau": bias.tau, "lambda": bias.lam, "k": portfolio.k,
        "samples": res.samples, "seed": opts["seed"], "streams": opts["streams"],
        "mean_perceived": res.mean_perceived, "stderr_perceived": res.stderr_perceived,
        "exact_perceived": exact_u,
        "z_perceived": (res.mean_perceived - exact_u) / res.stderr_perceived if res.stderr_perceived else 0.0,
        "mean_payoff": res.mean_payoff, "stderr_payoff": res.stderr_payoff, "exact_payoff": exact_p,
        "z_payoff": (res.mean_payoff - exact_p) / res.stderr_payoff if res.stderr_payoff else 0.0,
    }
    return Result([], summary)


def cmd_bounds(opts: dict[str, Any]) -> Result:
    rep = bounds.bounds_report(opts["gamma"], opts["k"], opts["c"])
    k = rep.k
    rows = [{"i": i, "rational": (k + 1 - i) / (k + 1), "lower": lo, "upper": hi}
            for i, (lo, hi) in enumerate(zip(rep.xi_lower, rep.xi_upper), start=1)]
    summary = {
        "gamma": rep.gamma, "k": k, "h_gamma": rep.h_gamma, "above_two_thirds_cap": rep.above_two_thirds_cap,
        "c": rep.c, "m_gamma_c": rep.m_gamma_c, "p_gamma": rep.p_gamma, "c_star": rep.c_star,
        "k_gamma": rep.k_gamma,
    }
    return Result(rows, summary)


def cmd_overshoot(opts: dict[str, Any]) -> Result:
    a, b = opts["a"], opts["b"]
    if (a is None) != (b is None):
        raise DomainError("local mode needs both --a and --b")
    if a is not None:
        gammas = opts["gamma"] or [0.1]
        rows = []
        for g in gammas:
            r = overshoot.interior_optimum(a, b, g)
            rows.append({"a": a, "b": b, "gamma": g, "x_star": r.x_star, "midpoint": r.midpoint,
                         "overshoots": r.overshoots, "residual": r.stationarity_residual})
        return Result(rows)

    k, points = opts["k"], opts["points"]
    gammas = opts["gamma"] or list(np.linspace(opts["gamma_max"] / points, opts["gamma_max"], points))
    rows = []
    for row in overshoot.global_overshoot_scan(k, sorted(gammas)):
        xs = solve(k, row.gamma).portfolio.schools
        # exploratory: how many schools above 2/3 sit above their rational position
        high = [(i, x) for i, x in enumerate(xs, start=1) if x > 2.0 / 3.0]
        rows.append({
            "gamma": row.gamma, "x_top": row.x_top, "top_margin": row.top_margin,
            "overshoots_top": row.overshoots_top, "x_bottom": row.x_bottom, "bottom_margin": row.bottom_margin,
            "undershoots_bottom": row.undershoots_bottom, "top_lower_bound": row.top_lower_bound,
            "bottom_upper_bound": row.bottom_upper_bound, "above_two_thirds": len(high),
            "above_two_thirds_overshooting": sum(x > (k + 1 - i) / (k + 1) for i, x in high),
        })
    return Result(rows)


COMMANDS: dict[str, Callable[[dict[str, Any]], Result]] = {
    "solve": cmd_solve,
    "table": cmd_table,
    "figure": cmd_figure,
    "verify": cmd_verify,
    "oracle": cmd_oracle,
    "mc": cmd_mc,
    "bounds": cmd_bounds,
    "overshoot": cmd_overshoot,
}


def write_outputs(command: str, opts: dict[str, Any], text: str) -> None:
    out = Path(opts["out"])
    out.write_text(text, encoding="utf-8")
    params = {k: v for k, v in sorted(opts.items()) if k not in ("out", "config")}
    manifest = {
        "command": command,
        "parameters": params,
        "tool_version": __version__,
        "outputs": [str(out)],
    }
    manifest_path = Path(f"{out}.manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    command = ns.command
    try:
        opts = resolve_options(ns)
        result = COMMANDS[command](opts)
    except SolverError as exc:
        sys.stderr.write(f"error: {exc}\n")
        if exc.grid is not None and exc.shots is not None:
            sys.stderr.write("bracket grid (t, mismatch):\n")
            for t, s in zip(exc.grid, exc.shots):
                sys.stderr.write(f"  {fmt(float(t))}, {fmt(float(s))}\n")
        return EXIT_SOLVER
    except (DomainError, ResourceError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE

    text = render(command, result, opts["format"])
    if opts["out"]:
        write_outputs(command, opts, text)
    else:
        sys.stdout.write(text)
    return EXIT_VIOLATION if result.failed else EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
