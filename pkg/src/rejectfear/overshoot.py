"""Over- and undershooting relative to the rational portfolio.

Locally, with neighbours ``a < b`` fixed, the best school between them
satisfies ``2x - (a + b) + gamma (2x - 3x^2) = 0``.  It lies above the
midpoint exactly when ``a + b > 4/3``.  Globally, for small gamma the top
school of a k-portfolio sits above ``k/(k+1)`` while the bottom one sits
below ``1/(k+1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .bounds import bottom_school_upper_bound, top_school_lower_bound
from .errors import DomainError
from .solver import SolveConfig, solve

GAMMA_MAX = 2.0 - math.sqrt(3.0)
GAMMA_MAX_EXTENDED = 0.5
LOCAL_THRESHOLD = 4.0 / 3.0

# k = 5 thresholds below which the analytic argument guarantees each flag
K5_TOP_GAMMA = 0.0142912
K5_BOTTOM_GAMMA = 1.0 / 216.0


@dataclass(frozen=True)
class LocalOvershootResult:
    a: float
    b: float
    gamma: float
    x_star: float
    midpoint: float
    overshoots: bool

    @property
    def stationarity_residual(self) -> float:
        x = self.x_star
        return 2.0 * x - (self.a + self.b) + self.gamma * (2.0 * x - 3.0 * x * x)


def _check_gamma(gamma: float, extended: bool) -> None:
    cap = GAMMA_MAX_EXTENDED if extended else GAMMA_MAX
    if not 0.0 < gamma < cap:
        raise DomainError(f"gamma must lie in (0, {cap:.6g}), got {gamma}")


def interior_optimum(a: float, b: float, gamma: float, extended: bool = False) -> LocalOvershootResult:
    """Best school strictly between fixed neighbours ``a < b``.

    Uses the smaller root of the stationarity quadratic, written as
    ``z / (1 + gamma + sqrt((1 + gamma)^2 - 3 gamma z))`` so it stays exact
    as gamma goes to 0.  ``extended=True`` admits gamma up to 1/2.
    """
    if not 0.0 <= a < b <= 1.0:
        raise DomainError(f"need 0 <= a < b <= 1, got a={a}, b={b}")
    _check_gamma(gamma, extended)
    z = a + b
    disc = (1.0 + gamma) ** 2 - 3.0 * gamma * z
    if disc < 0.0:
        raise DomainError(f"no real stationary point for a + b = {z}, gamma = {gamma}")
    x = z / (1.0 + gamma + math.sqrt(disc))
    if not a < x < b:
        raise DomainError(f"stationary point {x} falls outside ({a}, {b})")
    midpoint = 0.5 * z
    return LocalOvershootResult(a=a, b=b, gamma=gamma, x_star=x, midpoint=midpoint,
                                overshoots=z > LOCAL_THRESHOLD)


def neighbour_utility(x: float, a: float, b: float, gamma: float) -> float:
    """Terms of the perceived utility that depend on a school between ``a`` and ``b``."""
    return -gamma * (1.0 - x) * x * x + x * (b - x) + a * (x - a)


def theta_band(gamma: float) -> tuple[float, float]:
    """Open interval of ratios ``theta`` admitting a threshold ``z(theta)`` in (0, 2)."""
    _check_gamma(gamma, extended=False)
    lo = 1.0 / (2.0 * (1.0 + gamma))
    hi = (1.0 + gamma - math.sqrt((1.0 + gamma) ** 2 - 6.0 * gamma)) / (6.0 * gamma)
    return lo, hi


def theta_threshold(theta: float, gamma: float) -> float:
    """Neighbour sum above which the interior optimum exceeds ``theta (a + b)``.

    Evaluates ``(6 theta (1 + gamma) - 3) / (9 theta^2 gamma)`` in the
    rearranged form ``((2 theta - 1)/gamma + 2 theta) / (3 theta^2)``, which
    returns exactly 4/3 at ``theta = 1/2``.
    """
    lo, hi = theta_band(gamma)
    if not lo < theta < hi:
        raise DomainError(f"theta={theta} outside feasible band ({lo:.9g}, {hi:.9g}) for gamma={gamma}")
    return ((2.0 * theta - 1.0) / gamma + 2.0 * theta) / (3.0 * theta * theta)


@dataclass(frozen=True)
class OvershootRow:
    gamma: float
    k: int
    x_top: float
    x_bottom: float
    top_margin: float
    bottom_margin: float
    top_lower_bound: Optional[float]
    bottom_upper_bound: Optional[float]

    @property
    def overshoots_top(self) -> bool:
        return self.top_margin > 0.0

    @property
    def undershoots_bottom(self) -> bool:
        return self.bottom_margin < 0.0


def global_overshoot_scan(k: int, gamma_grid: Sequence[float],
                          config: Optional[SolveConfig] = None) -> list[OvershootRow]:
    """Solve each gamma and compare the extreme schools with ``k/(k+1)`` and ``1/(k+1)``.

    Analytic bounds from the refined envelope are attached where they apply
    (``gamma <= 8/(k+1)^3``).
    """
    grid = list(gamma_grid)
    if any(g <= 0 for g in grid):
        raise DomainError("gamma grid must be positive")
    if grid != sorted(grid):
        raise DomainError("gamma grid must be sorted ascending")
    rows = []
    for gamma in grid:
        xs = solve(k, gamma, config).portfolio.schools
        analytic = gamma <= 8.0 / (k + 1) ** 3
        rows.append(OvershootRow(
            gamma=gamma,
            k=k,
            x_top=xs[0],
            x_bottom=xs[-1],
            top_margin=xs[0] - k / (k + 1),
            bottom_margin=xs[-1] - 1.0 / (k + 1),
            top_lower_bound=top_school_lower_bound(k, gamma) if analytic else None,
            bottom_upper_bound=bottom_school_upper_bound(k, gamma) if analytic else None,
        ))
    return rows


def convergence_trace(k: int, i: int, gamma_grid: Sequence[float],
                      config: Optional[SolveConfig] = None) -> list[float]:
    """``x_i(gamma)`` along a strictly decreasing grid (0 allowed as the last point)."""
    if not 1 <= i <= k:
        raise DomainError(f"index {i} outside 1..{k}")
    grid = list(gamma_grid)
    if any(g < 0 for g in grid):
        raise DomainError("gamma grid must be nonnegative")
    if any(b >= a for a, b in zip(grid, grid[1:])):
        raise DomainError("gamma grid must be strictly decreasing")
    return [solve(k, g, config).portfolio.schools[i - 1] for g in grid]
