"""Optimal k-school portfolios for a gamma-biased student.

Interior optima satisfy the three-term recurrence

    x_{i+1} = 2 x_i - x_{i-1} + gamma (2 x_i - 3 x_i^2)

with ``x_0 = 1`` and, for the last school, a virtual ``x_{k+1} = 0``.  The
recurrence is symmetric in ``x_{i-1}`` and ``x_{i+1}``, so the same map run
upwards from ``(x_{k+1}, x_k) = (0, t)`` reconstructs the whole portfolio from
its lowest school.  We shoot in that direction: the small schools grow
geometrically going up, which keeps the shot well conditioned even when the
tail of the portfolio sits at 1e-40.  Forward shooting from ``x_1`` loses all
accuracy after a few dozen schools.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from math import comb
from typing import Optional

import mpmath
import numpy as np

from .errors import DomainError, ResourceError, SolverError
from .model import (
    BiasLike,
    GapProfile,
    Portfolio,
    as_bias,
    gap_profile,
    perceived_utility,
    true_payoff,
)

log = logging.getLogger(__name__)

# shots leaving this window are frozen and reported with a large signed mismatch
ESCAPE_LOW = -0.5
ESCAPE_HIGH = 1.5
ESCAPED_MISMATCH = 1e3

POINTS_PER_PERIOD = 8
MAX_GRID_POINTS = 50_000

ORACLE_MAX_TUPLES = 10**9
ORACLE_MAX_K = 4


@dataclass(frozen=True)
class SolveConfig:
    boundary_tolerance: float = 1e-12
    max_bisection_iters: int = 200
    multistart_count: int = 256
    # freeze shots that escape [-0.5, 1.5]; otherwise iterate to the end and
    # drop non-finite shots from bracketing
    clamp_negative: bool = True

    def __post_init__(self) -> None:
        if not self.boundary_tolerance > 0:
            raise DomainError("boundary_tolerance must be positive")
        if self.multistart_count < 1:
            raise DomainError("multistart_count must be >= 1")
        if self.max_bisection_iters < 1:
            raise ValueError("max_bisection_iters must be >= 1")


@dataclass(frozen=True)
class SolveReport:
    portfolio: Portfolio
    gamma: float
    perceived: float
    payoff: float
    residuals: tuple[float, ...]
    boundary_error: float
    gaps: GapProfile
    critical_points: int = 1
    method: str = "shooting"

    @property
    def k(self) -> int:
        return self.portfolio.k

    @property
    def max_residual(self) -> float:
        return max(abs(r) for r in self.residuals)


def foc_next(x_prev: float, x_cur: float, bias: BiasLike) -> float:
    """Next school from the first-order condition at ``x_cur``.

    Because the recurrence is symmetric, ``foc_next(x_{i+1}, x_i)`` also
    returns ``x_{i-1}``.
    """
    gamma = as_bias(bias).gamma
    return 2.0 * x_cur - x_prev + gamma * (2.0 * x_cur - 3.0 * x_cur * x_cur)


def foc_residuals(schools, gamma: float) -> tuple[float, ...]:
    """``dU/dx_i`` for every school, with ``x_0 = 1`` and ``x_{k+1} = 0``."""
    xs = [1.0, *schools, 0.0]
    return tuple(
        -gamma * (2.0 * xs[i] - 3.0 * xs[i] * xs[i]) + xs[i - 1] - 2.0 * xs[i] + xs[i + 1]
        for i in range(1, len(xs) - 1)
    )


def _shoot_many(t: np.ndarray, k: int, gamma: float, clamp: bool) -> np.ndarray:
    """Vectorised ``x_0(t) - 1`` for lowest-school guesses ``t``."""
    below = np.zeros_like(t)
    cur = t.astype(float, copy=True)
    escaped = np.zeros(t.shape, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(k):
            cur, below = 2.0 * cur - below + gamma * (2.0 * cur - 3.0 * cur * cur), cur
            if clamp:
                live = escaped == 0.0
                escaped[live & (cur > ESCAPE_HIGH)] = 1.0
                escaped[live & (cur < ESCAPE_LOW)] = -1.0
                frozen = escaped != 0.0
                cur[frozen] = 0.0
                below[frozen] = 0.0
    mismatch = cur - 1.0
    if clamp:
        mismatch = np.where(escaped != 0.0, escaped * ESCAPED_MISMATCH, mismatch)
    return mismatch


def _shoot(t: float, k: int, gamma: float, clamp: bool) -> float:
    below, cur = 0.0, t
    for _ in range(k):
        cur, below = 2.0 * cur - below + gamma * (2.0 * cur - 3.0 * cur * cur), cur
        if clamp:
            if cur > ESCAPE_HIGH:
                return ESCAPED_MISMATCH
            if cur < ESCAPE_LOW:
                return -ESCAPED_MISMATCH
        elif not math.isfinite(cur):
            return math.nan
    return cur - 1.0


def _trajectory(t: float, k: int, gamma: float) -> list[float]:
    """Schools ``[x_1, ..., x_k]`` generated upwards from ``x_k = t``."""
    xs = [0.0, t]
    for _ in range(k - 1):
        cur, below = xs[-1], xs[-2]
        xs.append(2.0 * cur - below + gamma * (2.0 * cur - 3.0 * cur * cur))
    return xs[:0:-1]


def _tail_growth(gamma: float) -> float:
    # dominant root of r^2 - (2 + 2 gamma) r + 1 = 0: growth of small schools
    return 1.0 + gamma + math.sqrt(gamma * gamma + 2.0 * gamma)


def shooting_grid(k: int, gamma: float, count: int) -> np.ndarray:
    """Lowest-school guesses: log-spaced down to the tail scale, plus a linear sweep.

    Multiplying ``x_k`` by the tail growth factor shifts the shot by roughly
    one school, so ``x_0(t)`` is close to periodic in ``log t``.  Admissible
    roots can sit in a fold covering about half a period, so the log grid
    takes at least ``POINTS_PER_PERIOD`` points per period, reaching
    ``growth**-(k + 8)``.
    """
    growth = _tail_growth(gamma)
    log_min = min(-(k + 8) * math.log(growth), math.log(0.1 / (k + 1)))
    if log_min < -300.0 * math.log(10.0):
        raise SolverError(
            f"portfolio tail for k={k}, gamma={gamma} falls below double precision range"
        )
    per_period = math.log(growth) / POINTS_PER_PERIOD
    n_geo = count if per_period == 0.0 else max(count, math.ceil(-log_min / per_period))
    n_geo = min(n_geo, MAX_GRID_POINTS)
    geometric = np.exp(np.linspace(log_min, 0.0, n_geo))
    linear = np.linspace(1.0 / count, 1.0, count)
    return np.unique(np.concatenate([geometric, linear]))


def _bisect(lo: float, hi: float, f_lo: float, k: int, gamma: float, config: SolveConfig) -> tuple[float, float]:
    """Bisect a sign change of the shot on ``[lo, hi]``.

    Splits geometrically while the bracket spans more than a factor of two,
    then arithmetically down to adjacent doubles.
    """
    best_t, best_f = lo, f_lo
    for _ in range(config.max_bisection_iters):
        mid = math.sqrt(lo * hi) if hi > 2.0 * lo else 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = _shoot(mid, k, gamma, config.clamp_negative)
        if abs(f_mid) < abs(best_f):
            best_t, best_f = mid, f_mid
        if f_mid == 0.0:
            break
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return best_t, best_f


def _is_admissible(xs: list[float]) -> bool:
    if not all(math.isfinite(x) for x in xs):
        return False
    if xs[0] > 1.0 or xs[-1] < 0.0:
        return False
    return all(a > b for a, b in zip(xs, xs[1:]))


def _report(xs, gamma: float, *, boundary_error: float, critical_points: int, method: str) -> SolveReport:
    portfolio = Portfolio(xs)
    return SolveReport(
        portfolio=portfolio,
        gamma=gamma,
        perceived=perceived_utility(portfolio, gamma),
        payoff=true_payoff(portfolio),
        residuals=foc_residuals(portfolio.schools, gamma),
        boundary_error=boundary_error,
        gaps=gap_profile(portfolio),
        critical_points=critical_points,
        method=method,
    )


def critical_points(k: int, bias: BiasLike, config: Optional[SolveConfig] = None) -> list[SolveReport]:
    """Every admissible interior critical point found by multistart shooting.

    Sorted by perceived utility, best first; ties go to the lexicographically
    largest portfolio.
    """
    if k < 1:
        raise DomainError(f"portfolio size must be positive, got {k}")
    gamma = as_bias(bias).gamma
    config = config or SolveConfig()

    grid = shooting_grid(k, gamma, config.multistart_count)
    shots = _shoot_many(grid, k, gamma, config.clamp_negative)

    found: list[tuple[float, list[float]]] = []
    for j in range(len(grid) - 1):
        f_lo, f_hi = shots[j], shots[j + 1]
        if not (np.isfinite(f_lo) and np.isfinite(f_hi)):
            continue
        if f_lo == 0.0:
            t, f = float(grid[j]), 0.0
        elif (f_lo < 0.0) != (f_hi < 0.0) and f_hi != 0.0:
            t, f = _bisect(float(grid[j]), float(grid[j + 1]), float(f_lo), k, gamma, config)
        else:
            continue
        if abs(f) > config.boundary_tolerance:
            # bracket straddled an escape discontinuity, not a root
            continue
        xs = _trajectory(t, k, gamma)
        if _is_admissible(xs):
            found.append((abs(f), xs))

    reports = []
    seen = set()
    for err, xs in found:
        key = tuple(round(x, 12) for x in xs)
        if key in seen:
            continue
        seen.add(key)
        reports.append(_report(xs, gamma, boundary_error=err, critical_points=0, method="shooting"))
    if not reports:
        raise SolverError(
            f"no admissible critical point for k={k}, gamma={gamma}",
            grid=grid,
            shots=shots,
        )
    reports.sort(key=lambda r: (-r.perceived, tuple(-x for x in r.portfolio.schools)))
    n = len(reports)
    return [_with_count(r, n) for r in reports]


def _with_count(report: SolveReport, n: int) -> SolveReport:
    return SolveReport(**{**report.__dict__, "critical_points": n})


def solve(k: int, bias: BiasLike, config: Optional[SolveConfig] = None) -> SolveReport:
    """Optimal k-school portfolio: the best critical point of the recurrence.

    ``gamma == 0`` short-circuits to the equally spaced rational portfolio.
    """
    if k < 1:
        raise DomainError(f"portfolio size must be positive, got {k}")
    gamma = as_bias(bias).gamma
    if gamma < 0:
        raise DomainError(f"gamma must be nonnegative, got {gamma}")
    if gamma == 0.0:
        xs = Portfolio.equally_spaced(k).schools
        return _report(xs, 0.0, boundary_error=0.0, critical_points=1, method="closed-form")
    best = critical_points(k, gamma, config)[0]
    log.debug("solve k=%d gamma=%g: %d critical points", k, gamma, best.critical_points)
    return best


def precise_perceived(k: int, bias: BiasLike, digits: int = 80,
                      config: Optional[SolveConfig] = None) -> mpmath.mpf:
    """``OPT(k)`` to roughly ``digits`` significant digits.

    Consecutive optima can differ by far less than one ulp of a double once
    the added school is tiny (around 1e-45 at gamma = 3, k = 25), so the
    double-precision shot is polished by Newton's method in ``digits``-digit
    arithmetic before the utility is summed.  The derivative of the shot is
    carried through the recurrence alongside it.
    """
    report = solve(k, bias, config)
    with mpmath.workdps(digits):
        gamma = mpmath.mpf(report.gamma)
        t = mpmath.mpf(report.portfolio.schools[-1])
        eps = mpmath.mpf(10) ** (3 - digits)
        for _ in range(100):
            prev, cur, d_prev, d_cur = mpmath.mpf(0), t, mpmath.mpf(0), mpmath.mpf(1)
            for _ in range(k):
                prev, cur, d_prev, d_cur = (cur, 2 * cur - prev + gamma * (2 * cur - 3 * cur * cur),
                                            d_cur, (2 + gamma * (2 - 6 * cur)) * d_cur - d_prev)
            step = (cur - 1) / d_cur
            t -= step
            if abs(step) <= abs(t) * eps:
                break
        else:
            raise SolverError(f"extended-precision polish did not converge for k={k}, gamma={report.gamma}")
        xs = [mpmath.mpf(0), t]
        for _ in range(k):
            xs.append(2 * xs[-1] - xs[-2] + gamma * (2 * xs[-1] - 3 * xs[-1] ** 2))
        xs = xs[:0:-1]
        xs[0] = mpmath.mpf(1)
        return mpmath.fsum(-gamma * (1 - x) * x * x + x * (above - x) for above, x in zip(xs, xs[1:]))


def utility_is_increasing_in_k(k_max: int, bias: BiasLike, config: Optional[SolveConfig] = None,
                               digits: Optional[int] = None) -> list:
    """``OPT(1), ..., OPT(k_max)``; callers check strict increase.

    With ``digits`` the values are ``mpmath`` numbers from
    ``precise_perceived``, which resolve increments below double precision.
    """
    if k_max < 2:
        raise DomainError(f"k_max must be at least 2, got {k_max}")
    if digits is not None:
        return [precise_perceived(k, bias, digits, config) for k in range(1, k_max + 1)]
    return [solve(k, bias, config).perceived for k in range(1, k_max + 1)]


def oracle_solve(k: int, bias: BiasLike, resolution: float = 1e-3) -> SolveReport:
    """Exact maximiser of perceived utility over all strictly decreasing grid tuples.

    Utility is a sum of terms coupling only neighbouring schools, so the
    maximum over all ``C(n, k)`` tuples is found by a max-plus sweep over the
    chain instead of listing them.  It never uses the first-order conditions.
    Ties go to the lexicographically largest tuple.
    """
    if not 1 <= k <= ORACLE_MAX_K:
        raise DomainError(f"oracle supports 1 <= k <= {ORACLE_MAX_K}, got {k}")
    if not 0 < resolution <= 0.5:
        raise DomainError(f"oracle resolution must lie in (0, 1/2], got {resolution}")
    gamma = as_bias(bias).gamma
    steps = round(1.0 / resolution)
    if not math.isclose(steps * resolution, 1.0, rel_tol=1e-9):
        raise DomainError(f"resolution {resolution} does not divide [0, 1]")
    n = steps + 1
    if comb(n, k) > ORACLE_MAX_TUPLES:
        raise ResourceError(f"C({n}, {k}) grid tuples exceed {ORACLE_MAX_TUPLES}")

    grid = np.arange(n) / steps
    # pair[b, c]: utility of school grid[c] sitting directly below grid[b]
    cur = grid[None, :]
    pair = -gamma * (1.0 - cur) * cur * cur + cur * (grid[:, None] - cur)
    pair = np.where(np.tril(np.ones((n, n), dtype=bool), k=-1), pair, -np.inf)

    # tails[m][b]: best utility of m further schools strictly below grid[b]
    tails = [np.zeros(n)]
    choices = []
    for _ in range(k - 1):
        total = pair + tails[-1][None, :]
        # largest index among maximisers
        pick = n - 1 - np.argmax(total[:, ::-1], axis=1)
        tails.append(total[np.arange(n), pick])
        choices.append(pick)

    top = -gamma * (1.0 - grid) * grid * grid + grid * (1.0 - grid) + tails[-1]
    a = n - 1 - int(np.argmax(top[::-1]))
    idx = [a]
    for pick in reversed(choices):
        idx.append(int(pick[idx[-1]]))
    xs = [float(grid[i]) for i in idx]
    residuals = foc_residuals(xs, gamma)
    report = _report(xs, gamma, boundary_error=abs(residuals[-1]), critical_points=0, method="grid-oracle")
    return report
