"""Invariant suites behind ``rejectfear verify``.

Every check compares full-precision values against a tolerance and reports
a signed margin: positive means the property holds with that much room.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import bounds, overshoot
from .model import BiasParams, Portfolio, perceived_utility, true_payoff
from .montecarlo import SimConfig, simulate
from .solver import oracle_solve, solve, utility_is_increasing_in_k

BOUND_GAMMAS = (0.01, 0.05, 0.1, 1.0 / 3.0, 0.5, 1.0, 2.0, 3.0)
BOUND_KS = range(2, 26)
BAND_CS = (0.1, 0.3, 0.5)
ORACLE_GAMMAS = (0.0, 0.1, 0.5, 1.0)
MC_REFERENCE_PAYOFF = 0.413675
MC_COLLAPSE_PAIRS = ((0.1, 2.0), (0.05, 3.0), (0.2, 1.5))
SANDWICH_SLACK = 1e-12
# increments reach ~1e-45 at gamma = 3, k = 25
OPT_DIGITS = 80


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    margin: float
    detail: str = ""


def _check(name: str, margin: float, detail: str = "") -> Check:
    return Check(name=name, passed=bool(margin >= 0.0), margin=float(margin), detail=detail)


def foc_suite() -> list[Check]:
    checks = []
    worst, where = math.inf, ""
    for gamma in BOUND_GAMMAS:
        for k in (1, 2, 5, 10, 25, 50, 100):
            r = solve(k, gamma)
            margin = 1e-9 - r.max_residual
            if margin < worst:
                worst, where = margin, f"gamma={gamma:g} k={k}"
    checks.append(_check("first-order residuals <= 1e-9", worst, f"tightest at {where}"))

    err = max(
        max(abs(x - (k + 1 - i) / (k + 1)) for i, x in enumerate(solve(k, 0.0).portfolio, start=1))
        for k in range(1, 101)
    )
    checks.append(_check("gamma=0 equal spacing within 1e-10", 1e-10 - err))
    pay = max(abs(solve(k, 0.0).payoff - k / (2 * (k + 1))) for k in range(1, 101))
    checks.append(_check("gamma=0 payoff k/(2(k+1)) within 1e-12", 1e-12 - pay))
    return checks


def bounds_suite() -> list[Check]:
    stats = {
        "x2 <= h(gamma)": math.inf,
        "count above 2/3 <= ceil(cap)": math.inf,
        "count above c <= m(gamma, c)": math.inf,
        "schools inside per-index sandwich": math.inf,
        "gap law residual <= 1e-9": math.inf,
        "OPT(k) strictly increasing": math.inf,
        "max payoff <= p(gamma)": math.inf,
        "k/(2(k+1)) > p(gamma) beyond k(gamma)": math.inf,
    }

    def note(key: str, margin: float) -> None:
        stats[key] = min(stats[key], margin)

    for gamma in BOUND_GAMMAS:
        h = bounds.h_of_gamma(gamma)
        cap = math.ceil(bounds.above_two_thirds_cap(gamma))
        reports = {k: solve(k, gamma) for k in BOUND_KS}
        for k, r in reports.items():
            xs = np.array(r.portfolio.schools)
            note("x2 <= h(gamma)", h - xs[1])
            note("count above 2/3 <= ceil(cap)", cap - int(np.sum(xs > 2.0 / 3.0)))
            for c in BAND_CS:
                note("count above c <= m(gamma, c)", bounds.m_of_gamma_c(gamma, c) - int(np.sum(xs > c)))
            lo, hi = bounds.xi_sandwich(k, gamma)
            note("schools inside per-index sandwich",
                 float(min(np.min(xs - lo), np.min(np.asarray(hi) - xs))) + SANDWICH_SLACK)
            note("gap law residual <= 1e-9", 1e-9 - _gap_law_residual(xs, gamma))
        opt = utility_is_increasing_in_k(25, gamma, digits=OPT_DIGITS)
        note("OPT(k) strictly increasing", float(min(b - a for a, b in zip(opt, opt[1:]))))

        ceiling = bounds.p_of_gamma(gamma)
        best_payoff = max(solve(k, gamma).payoff for k in range(1, 101))
        note("max payoff <= p(gamma)", ceiling.p - best_payoff)
        k_gamma = bounds.rational_budget(ceiling.p)
        ks = np.arange(math.floor(k_gamma) + 1, 10_001)
        if ks.size:
            note("k/(2(k+1)) > p(gamma) beyond k(gamma)", float(np.min(ks / (2.0 * (ks + 1)) - ceiling.p)))

    # these two are strict inequalities
    checks = []
    for name, margin in stats.items():
        if name.startswith(("OPT", "k/(2")):
            checks.append(Check(name, bool(margin > 0.0), margin))
        else:
            checks.append(_check(name, margin))
    return checks


def _gap_law_residual(xs: np.ndarray, gamma: float) -> float:
    """``Delta_{i+1} - Delta_i - gamma drift(x_i)`` over interior indices."""
    full = np.concatenate([[1.0], xs, [0.0]])
    deltas = full[:-1] - full[1:]
    interior = xs[:-1]
    resid = deltas[1:-1] - deltas[:-2] + gamma * (2.0 * interior - 3.0 * interior ** 2)
    return float(np.max(np.abs(resid))) if resid.size else 0.0


def oracle_suite(resolution: float = 1e-3) -> list[Check]:
    coord, util = math.inf, math.inf
    for gamma in ORACLE_GAMMAS:
        for k in (1, 2, 3):
            r = solve(k, gamma)
            o = oracle_solve(k, gamma, resolution)
            coord = min(coord, 2e-3 - max(abs(a - b) for a, b in zip(r.portfolio, o.portfolio)))
            util = min(util, 1e-5 - abs(r.perceived - o.perceived))
    return [
        _check("solve vs grid oracle, coordinates within 2e-3", coord),
        _check("solve vs grid oracle, perceived utility within 1e-5", util),
    ]


def montecarlo_suite(seed: int = 42, samples: int = 10_000_000) -> list[Check]:
    portfolio = solve(5, 0.1).portfolio
    checks = []
    r = simulate(portfolio, BiasParams.from_tau_lambda(0.1, 2.0), SimConfig(samples=samples, seed=seed))
    z = abs(r.mean_payoff - MC_REFERENCE_PAYOFF) / r.stderr_payoff
    checks.append(_check("gamma=0.1 k=5 mean payoff within 3 stderr of 0.413675", 3.0 - z, f"z={z:.3f}"))
    z = abs(r.mean_payoff - true_payoff(portfolio)) / r.stderr_payoff
    checks.append(_check("mean payoff within 3 stderr of true payoff", 3.0 - z, f"z={z:.3f}"))

    target = perceived_utility(portfolio, 0.1)
    for tau, lam in MC_COLLAPSE_PAIRS:
        r = simulate(portfolio, BiasParams.from_tau_lambda(tau, lam), SimConfig(samples=samples, seed=seed))
        z = abs(r.mean_perceived - target) / r.stderr_perceived
        checks.append(_check(f"perceived mean at tau={tau:g} lambda={lam:g} within 3 stderr", 3.0 - z,
                             f"z={z:.3f}"))

    r = simulate(Portfolio([1.0 / 3.0]), BiasParams.from_tau_lambda(1.0, 2.0), SimConfig(samples=samples, seed=seed))
    z = abs(r.mean_perceived - 4.0 / 27.0) / r.stderr_perceived
    checks.append(_check("single school 1/3 at gamma=1 perceived 4/27 within 3 stderr", 3.0 - z, f"z={z:.3f}"))
    return checks


def local_grid(n: int = 10) -> list[tuple[float, float, float]]:
    """``n * n`` cases ``(a, b, gamma)`` with ``a + b`` straddling 4/3.

    Neighbours are placed symmetrically around ``(a + b)/2`` as far apart as
    [0, 1] allows, so the interior optimum stays strictly between them.
    """
    cases = []
    for gamma in np.linspace(0.01, 0.25, n):
        for z in np.linspace(0.4, 1.7, n):
            half = 0.95 * min(z / 2.0, 1.0 - z / 2.0)
            cases.append((float(z / 2.0 - half), float(z / 2.0 + half), float(gamma)))
    return cases


def k5_grids(points: int = 20) -> tuple[np.ndarray, np.ndarray]:
    top = np.linspace(overshoot.K5_TOP_GAMMA / points, overshoot.K5_TOP_GAMMA, points)
    bottom = np.linspace(overshoot.K5_BOTTOM_GAMMA / (points + 1), overshoot.K5_BOTTOM_GAMMA * points / (points + 1),
                         points)
    return top, bottom


def overshoot_suite() -> list[Check]:
    resid, sign = math.inf, math.inf
    for a, b, gamma in local_grid():
        r = overshoot.interior_optimum(a, b, gamma)
        resid = min(resid, 1e-10 - abs(r.stationarity_residual))
        agree = np.sign(r.x_star - r.midpoint) == np.sign(a + b - overshoot.LOCAL_THRESHOLD)
        sign = min(sign, abs(r.x_star - r.midpoint) if agree else -abs(r.x_star - r.midpoint))
    checks = [
        _check("interior optimum stationarity residual <= 1e-10", resid),
        _check("overshoot direction matches sign(a + b - 4/3)", sign),
    ]
    exact = overshoot.theta_threshold(0.5, 0.1) == overshoot.LOCAL_THRESHOLD
    checks.append(Check("theta_threshold(1/2) == 4/3 exactly", exact, 0.0 if exact else -1.0))

    top, bottom = k5_grids()
    rows = overshoot.global_overshoot_scan(5, top)
    least = min(r.top_margin for r in rows)
    checks.append(Check("k=5 top school above 5/6", least > 0.0, least))
    rows = overshoot.global_overshoot_scan(5, bottom)
    worst = max(r.bottom_margin for r in rows)
    checks.append(Check("k=5 bottom school below 1/6", worst < 0.0, -worst))
    return checks


SUITES: dict[str, Callable[..., list[Check]]] = {
    "foc": foc_suite,
    "bounds": bounds_suite,
    "oracle": oracle_suite,
    "montecarlo": montecarlo_suite,
    "overshoot": overshoot_suite,
}


def run_suite(name: str, seed: int = 42, samples: int = 10_000_000) -> list[Check]:
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise ValueError(f"unknown suite {name!r}")
    out = []
    for n in names:
        suite = SUITES[n]
        results = suite(seed=seed, samples=samples) if n == "montecarlo" else suite()
        out.extend(Check(f"{n}: {c.name}", c.passed, c.margin, c.detail) for c in results)
    return out
