"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``ACCEPTANCE <n> PASS|FAIL`` line (outside pytest's
output capture) before asserting.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from rejectfear import bounds, overshoot
from rejectfear.model import BiasParams, Portfolio, perceived_utility, true_payoff
from rejectfear.montecarlo import SimConfig, simulate
from rejectfear.reference import FREEZING_TABLE, PAYOFF_GAMMAS, PAYOFF_KS, PAYOFF_TABLE, freezing_reference
from rejectfear.solver import oracle_solve, solve, utility_is_increasing_in_k


@pytest.fixture
def report(capsys):
    def emit(n, passed, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} {'PASS' if passed else 'FAIL'}: {detail}")
    return emit


def test_criterion_1_freezing_table(report):
    start = time.perf_counter()
    misses = []
    worst = 0.0
    for gamma, rows in FREEZING_TABLE.items():
        for k in rows:
            xs = solve(k, gamma).portfolio.schools
            for i, printed in enumerate(freezing_reference(gamma, k), start=1):
                err = abs(xs[i - 1] - printed)
                worst = max(worst, err)
                if err > 5e-4:
                    misses.append(f"gamma={gamma:g} k={k} i={i}: solved {xs[i - 1]:.6f} printed {printed}")
    elapsed = time.perf_counter() - start
    passed = not misses and elapsed < 5.0
    report(1, passed, f"{len(misses)} entries off by more than 5e-4 (worst {worst:.2e}), {elapsed:.2f}s"
           + "".join(f"\n    {m}" for m in misses[:12]) + ("\n    ..." if len(misses) > 12 else ""))
    assert elapsed < 5.0
    assert not misses


def test_criterion_2_payoff_table(report):
    start = time.perf_counter()
    misses, worst = [], 0.0
    for gamma in PAYOFF_GAMMAS:
        for k in PAYOFF_KS:
            pay = true_payoff(solve(k, gamma).portfolio)
            err = abs(pay - PAYOFF_TABLE[gamma][k])
            worst = max(worst, err)
            if err > 1e-5:
                misses.append(f"gamma={gamma:g} k={k}: solved {pay:.10f} printed {PAYOFF_TABLE[gamma][k]}")
    unbiased = max(abs(true_payoff(solve(k, 0.0).portfolio) - k / (2 * (k + 1))) for k in PAYOFF_KS)
    elapsed = time.perf_counter() - start
    passed = not misses and unbiased <= 1e-12 and elapsed < 30.0
    report(2, passed, f"{len(misses)} cells off by more than 1e-5 (worst {worst:.2e}); unbiased column error "
           f"{unbiased:.1e}; {elapsed:.2f}s" + "".join(f"\n    {m}" for m in misses))
    assert unbiased <= 1e-12
    assert elapsed < 30.0
    assert not misses


def test_criterion_3_equal_spacing(report):
    worst_x = worst_pay = 0.0
    for k in range(1, 101):
        r = solve(k, 0.0)
        worst_x = max(worst_x, max(abs(x - (k + 1 - i) / (k + 1)) for i, x in enumerate(r.portfolio, start=1)))
        worst_pay = max(worst_pay, abs(r.payoff - k / (2 * (k + 1))))
    passed = worst_x <= 1e-10 and worst_pay <= 1e-12
    report(3, passed, f"max position error {worst_x:.1e}, max payoff error {worst_pay:.1e}")
    assert passed


def test_criterion_4_oracle(report):
    start = time.perf_counter()
    coord = util = 0.0
    for gamma in (0.0, 0.1, 0.5, 1.0):
        for k in (1, 2, 3):
            r, o = solve(k, gamma), oracle_solve(k, gamma, 1e-3)
            coord = max(coord, max(abs(a - b) for a, b in zip(r.portfolio, o.portfolio)))
            util = max(util, abs(r.perceived - o.perceived))
    elapsed = time.perf_counter() - start
    passed = coord <= 2e-3 and util <= 1e-5 and elapsed < 120.0
    report(4, passed, f"max coordinate gap {coord:.2e}, max utility gap {util:.2e}, {elapsed:.2f}s")
    assert passed


def _gap_residual(xs, gamma):
    full = np.concatenate([[1.0], xs, [0.0]])
    d = full[:-1] - full[1:]
    mid = xs[:-1]
    return np.abs(d[1:-1] - d[:-2] + gamma * (2 * mid - 3 * mid * mid))


def test_criterion_5_bound_suite(report):
    failures = []
    for gamma in (0.01, 0.05, 0.1, 1 / 3, 0.5, 1.0, 2.0, 3.0):
        h = bounds.h_of_gamma(gamma)
        cap = math.ceil(bounds.above_two_thirds_cap(gamma))
        for k in range(2, 26):
            xs = np.array(solve(k, gamma).portfolio.schools)
            tag = f"gamma={gamma:.4g} k={k}"
            if xs[1] > h:
                failures.append(f"{tag}: x2={xs[1]} > h={h}")
            if np.sum(xs > 2 / 3) > cap:
                failures.append(f"{tag}: {np.sum(xs > 2 / 3)} schools above 2/3 > {cap}")
            for c in (0.1, 0.3, 0.5):
                if np.sum(xs > c) > bounds.m_of_gamma_c(gamma, c):
                    failures.append(f"{tag}: too many schools above {c}")
            lo, hi = bounds.xi_sandwich(k, gamma)
            if np.any(xs < np.array(lo)) or np.any(xs > np.array(hi)):
                failures.append(f"{tag}: outside per-index sandwich")
            if k > 1 and _gap_residual(xs, gamma).max() > 1e-9:
                failures.append(f"{tag}: gap law residual {_gap_residual(xs, gamma).max():.1e}")
        # extended precision: consecutive optima differ by as little as ~1e-45
        opt = utility_is_increasing_in_k(25, gamma, digits=80)
        if not all(b > a for a, b in zip(opt, opt[1:])):
            failures.append(f"gamma={gamma:.4g}: OPT(k) not strictly increasing")
    report(5, not failures, f"{len(failures)} violations" + "".join(f"\n    {f}" for f in failures[:10]))
    assert not failures


def test_criterion_6_payoff_ceiling(report):
    failures, slack = [], math.inf
    for gamma in (0.01, 0.05, 0.1, 1 / 3, 0.5, 1.0, 2.0, 3.0):
        p = bounds.p_of_gamma(gamma).p
        best = max(solve(k, gamma).payoff for k in range(1, 101))
        slack = min(slack, p - best)
        if best > p:
            failures.append(f"gamma={gamma:.4g}: max payoff {best} > p={p}")
        k_gamma = bounds.k_of_gamma(gamma)
        ks = np.arange(math.floor(k_gamma) + 1, 10_001)
        if np.any(ks / (2.0 * (ks + 1)) <= p):
            failures.append(f"gamma={gamma:.4g}: rational payoff not above p beyond k={k_gamma:.3f}")
    report(6, not failures, f"min slack p(gamma) - max payoff = {slack:.3e}"
           + "".join(f"\n    {f}" for f in failures))
    assert not failures


def test_criterion_7_overshoot(report):
    resid, wrong = 0.0, 0
    for gamma in np.linspace(0.01, 0.25, 10):
        for z in np.linspace(0.4, 1.7, 10):
            half = 0.95 * min(z / 2, 1 - z / 2)
            r = overshoot.interior_optimum(z / 2 - half, z / 2 + half, gamma)
            resid = max(resid, abs(r.stationarity_residual))
            if np.sign(r.x_star - r.midpoint) != np.sign(z - 4 / 3):
                wrong += 1
    exact = overshoot.theta_threshold(0.5, 0.1) == 4 / 3
    top = overshoot.global_overshoot_scan(5, np.linspace(0.0142912 / 20, 0.0142912, 20))
    bottom = overshoot.global_overshoot_scan(5, np.linspace(1 / 216 / 21, 20 / 216 / 21, 20))
    top_ok = all(r.x_top > 5 / 6 for r in top)
    bottom_ok = all(r.x_bottom < 1 / 6 for r in bottom)
    passed = resid <= 1e-10 and wrong == 0 and exact and top_ok and bottom_ok
    report(7, passed, f"residual {resid:.1e}, sign mismatches {wrong}/100, theta(1/2) exact={exact}, "
           f"min x1-5/6 {min(r.top_margin for r in top):.2e}, max x5-1/6 {max(r.bottom_margin for r in bottom):.2e}")
    assert passed


def test_criterion_8_monte_carlo(report):
    start = time.perf_counter()
    portfolio = solve(5, 0.1).portfolio
    cfg = SimConfig(samples=10_000_000, seed=42)
    base = simulate(portfolio, BiasParams.from_tau_lambda(0.1, 2.0), cfg)
    z_pay = abs(base.mean_payoff - 0.413675) / base.stderr_payoff
    target = perceived_utility(portfolio, 0.1)
    zs = []
    for tau, lam in ((0.1, 2.0), (0.05, 3.0), (0.2, 1.5)):
        r = simulate(portfolio, BiasParams.from_tau_lambda(tau, lam), cfg)
        zs.append(abs(r.mean_perceived - target) / r.stderr_perceived)
    elapsed = time.perf_counter() - start
    passed = z_pay <= 3 and max(zs) <= 3 and elapsed < 60.0
    report(8, passed, f"payoff z={z_pay:.2f}, collapse z={', '.join(f'{z:.2f}' for z in zs)}, {elapsed:.2f}s")
    assert passed


CLI_RUNS = [
    ["solve", "--gamma", "0.1", "--k", "25", "--format", "csv"],
    ["table", "--which", "freezing", "--gamma", "0.5", "--k-max", "8", "--format", "json"],
    ["table", "--which", "payoff", "--k-max", "10", "--format", "csv"],
    ["figure", "--which", "deltas", "--format", "csv"],
    ["figure", "--which", "m_curve", "--points", "20", "--format", "json"],
    ["verify", "--suite", "overshoot"],
    ["oracle", "--k", "2", "--gamma", "0.5"],
    ["--seed", "7", "mc", "--samples", "200000", "--format", "json"],
    ["bounds", "--gamma", "0.1", "--k", "10", "--format", "csv"],
    ["overshoot", "--k", "5", "--points", "5", "--format", "csv"],
]


def test_criterion_9_determinism(report):
    differing = []
    for argv in CLI_RUNS:
        outs = [subprocess.run([sys.executable, "-m", "rejectfear", *argv], capture_output=True, check=True).stdout
                for _ in range(2)]
        if outs[0] != outs[1] or not outs[0]:
            differing.append(" ".join(argv))
    report(9, not differing, f"{len(CLI_RUNS) - len(differing)}/{len(CLI_RUNS)} commands byte-identical"
           + "".join(f"\n    differs: {d}" for d in differing))
    assert not differing
