import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rejectfear.errors import DomainError, ResourceError, SolverError
from rejectfear.model import Portfolio, perceived_utility
from rejectfear.solver import (
    SolveConfig,
    critical_points,
    foc_next,
    foc_residuals,
    oracle_solve,
    precise_perceived,
    shooting_grid,
    solve,
    utility_is_increasing_in_k,
)


def single_school_optimum(g):
    if g == 0:
        return 0.5
    return ((1 + g) - math.sqrt((1 + g) ** 2 - 3 * g)) / (3 * g)


def test_foc_next_rational_is_linear():
    assert foc_next(1.0, 0.75, 0.0) == pytest.approx(0.5)


def test_foc_next_bias_term():
    assert foc_next(1.0, 0.5, 1.0) == pytest.approx(0.0 + (1.0 - 0.75))


@pytest.mark.parametrize("k", [1, 2, 7, 50, 100])
def test_unbiased_is_equally_spaced(k):
    r = solve(k, 0.0)
    expected = [(k + 1 - i) / (k + 1) for i in range(1, k + 1)]
    assert np.max(np.abs(np.array(r.portfolio.schools) - expected)) <= 1e-12
    assert r.payoff == pytest.approx(k / (2 * (k + 1)), abs=1e-12)


@pytest.mark.parametrize("g", [0.01, 0.1, 0.5, 1.0, 2.0, 5.0])
def test_single_school_closed_form(g):
    assert solve(1, g).portfolio[0] == pytest.approx(single_school_optimum(g), abs=1e-12)


def test_two_school_value():
    # corrected reference: the printed 0.588 does not satisfy the first-order conditions
    xs = solve(2, 0.5).portfolio.schools
    assert xs == pytest.approx((0.558643, 0.207806), abs=1e-6)
    assert max(abs(r) for r in foc_residuals((0.588, 0.207), 0.5)) > 1e-2


@pytest.mark.parametrize("k, g", [(75, 0.01), (100, 0.05), (100, 0.5), (100, 3.0)])
def test_large_k_solves_with_small_residuals(k, g):
    r = solve(k, g)
    assert r.k == k
    assert r.max_residual <= 1e-9
    assert r.portfolio.schools[-1] >= 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.floats(1e-3, 3.0))
def test_solution_is_admissible_critical_point(k, g):
    r = solve(k, g)
    xs = np.array(r.portfolio.schools)
    assert np.all(np.diff(xs) < 0)
    assert xs[0] <= 1.0 and xs[-1] >= 0.0
    assert r.max_residual <= 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.floats(1e-3, 3.0), st.integers(0, 2**32 - 1))
def test_no_nearby_portfolio_does_better(k, g, seed):
    r = solve(k, g)
    rng = np.random.default_rng(seed)
    xs = np.array(r.portfolio.schools)
    for _ in range(20):
        trial = xs + rng.normal(scale=1e-3, size=k) * np.maximum(xs, 1e-6)
        trial = np.clip(np.sort(trial)[::-1], 0.0, 1.0)
        if np.any(np.diff(trial) >= 0):
            continue
        assert perceived_utility(Portfolio(trial), g) <= r.perceived + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 15), st.floats(1e-3, 3.0))
def test_beats_equal_spacing(k, g):
    assert solve(k, g).perceived >= perceived_utility(Portfolio.equally_spaced(k), g) - 1e-12


def test_critical_points_sorted_by_utility():
    pts = critical_points(2, 1.0)
    assert len(pts) >= 1
    assert all(a.perceived >= b.perceived for a, b in zip(pts, pts[1:]))
    assert pts[0].critical_points == len(pts)


def test_shooting_grid_is_sorted_and_positive():
    grid = shooting_grid(25, 0.1, 256)
    assert np.all(grid > 0) and np.all(np.diff(grid) > 0)


def test_domain_errors():
    with pytest.raises(DomainError):
        solve(0, 0.1)
    with pytest.raises(DomainError):
        solve(3, -0.1)


def test_solver_error_carries_grid(monkeypatch):
    import rejectfear.solver as solver

    monkeypatch.setattr(solver, "_is_admissible", lambda xs: False)
    with pytest.raises(SolverError) as info:
        solve(3, 0.2)
    assert info.value.grid is not None and len(info.value.grid) == len(info.value.shots)


def test_config_validation():
    with pytest.raises(DomainError):
        SolveConfig(boundary_tolerance=0.0)


def brute_force(k, g, resolution):
    grid = np.round(np.arange(0, 1 + resolution / 2, resolution), 12)
    best, best_xs = -math.inf, None
    for combo in itertools.combinations(grid[::-1], k):
        u = perceived_utility(Portfolio(combo), g)
        if u > best:
            best, best_xs = u, combo
    return best, best_xs


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("g", [0.0, 0.3, 1.0])
def test_oracle_matches_enumeration(k, g):
    best, xs = brute_force(k, g, 0.05)
    o = oracle_solve(k, g, 0.05)
    assert o.perceived == pytest.approx(best, abs=1e-14)
    assert o.portfolio.schools == pytest.approx(xs, abs=1e-12)


def test_oracle_close_to_solver():
    for g in (0.1, 1.0):
        o, r = oracle_solve(3, g, 1e-2), solve(3, g)
        assert max(abs(a - b) for a, b in zip(o.portfolio, r.portfolio)) < 2e-2
        assert r.perceived >= o.perceived - 1e-12


def test_oracle_limits():
    with pytest.raises(ResourceError):
        oracle_solve(4, 0.1, 1e-4)
    with pytest.raises(DomainError):
        oracle_solve(5, 0.1)
    with pytest.raises(DomainError):
        oracle_solve(2, 0.1, 0.03)
    with pytest.raises(DomainError):
        oracle_solve(2, 0.1, 0.75)


def test_utility_increasing_examples():
    assert utility_is_increasing_in_k(3, 0.0) == pytest.approx([0.25, 1 / 3, 0.375])
    vals = utility_is_increasing_in_k(3, 0.5)
    assert vals[0] < vals[1] < vals[2]


def test_precise_values_match_double():
    for k, g in [(1, 0.5), (5, 0.1), (20, 2.0)]:
        assert float(precise_perceived(k, g)) == pytest.approx(solve(k, g).perceived, abs=1e-15)


def test_precise_values_resolve_tiny_increments():
    vals = utility_is_increasing_in_k(25, 3.0, digits=80)
    diffs = [b - a for a, b in zip(vals, vals[1:])]
    assert all(d > 0 for d in diffs)
    assert float(min(diffs)) < 1e-30
