"""Closed-form bounds on biased portfolios.

Covers the cap on the second school, the number of schools above 2/3 and
above any constant ``c``, the payoff ceiling ``p(gamma) < 1/2`` with the
matching rational application budget, and per-school sandwiches around the
rational position ``(k + 1 - i) / (k + 1)``.

Throughout, ``drift(x) = -(2x - 3x^2)`` is the per-school change in the gap
sequence: ``Delta_{i+1} = Delta_i + gamma * drift(x_i)``.  On [0, 1] it
ranges over [-1/3, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError

TWO_THIRDS = 2.0 / 3.0
ONE_THIRD = 1.0 / 3.0
DRIFT_MIN = -1.0 / 3.0
DRIFT_MAX = 1.0
P_GRID_STEP = 1e-4


def drift(x: float) -> float:
    return -(2.0 * x - 3.0 * x * x)


def _require_positive(gamma: float) -> None:
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")


def h_of_gamma(gamma: float) -> float:
    """Upper bound on the second school ``x_2``, uniform in k."""
    _require_positive(gamma)
    if gamma < 0.5:
        return 1.0 - gamma
    if gamma < 2.0:
        return (1.0 - gamma + gamma * gamma) / (3.0 * gamma)
    disc = (1.0 - 2.0 * gamma) ** 2 - 4.0 * gamma
    assert disc >= 0.0, f"negative discriminant {disc} at gamma={gamma}"
    return (1.0 + 2.0 * gamma + math.sqrt(disc)) / (6.0 * gamma)


def above_two_thirds_cap(gamma: float) -> float:
    """Most schools a biased portfolio can place above 2/3.

    At the breakpoint ``gamma = 1/3`` the larger branch is returned.
    """
    _require_positive(gamma)
    if gamma > ONE_THIRD:
        return 1.0
    return 1.0 + 1.0 / (3.0 * gamma)


def band_cap(gamma: float, c: float) -> float:
    """Most schools in ``[c, 2/3]``."""
    _require_positive(gamma)
    if not 0.0 < c < TWO_THIRDS:
        raise DomainError(f"c must lie in (0, 2/3), got {c}")
    return (TWO_THIRDS - c) / math.sqrt(gamma * c * c * (1.0 - c)) + 1.0


def m_of_gamma_c(gamma: float, c: float) -> float:
    """Most schools above ``c``, uniform in k."""
    _require_positive(gamma)
    if not 0.0 < c < TWO_THIRDS:
        raise DomainError(f"c must lie in (0, 2/3), got {c}")
    spread = (TWO_THIRDS - c) / math.sqrt(gamma * c * c * (1.0 - c))
    if gamma <= ONE_THIRD:
        return 2.0 + 1.0 / (3.0 * gamma) + spread
    return 2.0 + spread


def _ceiling_at(gamma: float, c):
    c = np.asarray(c, dtype=float)
    spread = (TWO_THIRDS - c) / np.sqrt(gamma * c * c * (1.0 - c))
    m = 2.0 + spread + (1.0 / (3.0 * gamma) if gamma <= ONE_THIRD else 0.0)
    return 0.5 - (1.0 - c) ** 2 / (2.0 * (m + 1.0))


class PayoffCeiling(NamedTuple):
    p: float
    c_star: float


def p_of_gamma(gamma: float, step: float = P_GRID_STEP) -> PayoffCeiling:
    """Tightest payoff ceiling from splitting the score range at ``c``.

    Every ``c`` in (0, 2/3) gives a valid ceiling; we take the smallest,
    found on a grid of the given step and polished with a bounded scalar
    search around the best grid point.
    """
    _require_positive(gamma)
    grid = np.arange(step, TWO_THIRDS, step)
    values = _ceiling_at(gamma, grid)
    j = int(np.argmin(values))
    best_c, best_p = float(grid[j]), float(values[j])
    lo = float(grid[j - 1]) if j > 0 else best_c / 2.0
    hi = float(grid[j + 1]) if j + 1 < len(grid) else (best_c + TWO_THIRDS) / 2.0
    res = minimize_scalar(lambda c: float(_ceiling_at(gamma, c)), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    if res.success and res.fun < best_p:
        best_c, best_p = float(res.x), float(res.fun)
    return PayoffCeiling(best_p, best_c)


def rational_budget(p: float) -> float:
    """``2p / (1 - 2p)``: past this many applications a rational student earns more than ``p``."""
    if not 0.0 <= p < 0.5:
        raise DomainError(f"payoff ceiling must lie in [0, 1/2), got {p}")
    return 2.0 * p / (1.0 - 2.0 * p)


def k_of_gamma(gamma: float) -> float:
    return rational_budget(p_of_gamma(gamma).p)


def xi_sandwich(k: int, gamma: float) -> tuple[list[float], list[float]]:
    """Per-school bounds ``nominal - (gamma/3) w_i <= x_i <= nominal + gamma w_i``.

    ``nominal = (k + 1 - i) / (k + 1)`` and ``w_i = i (k + 1 - i) / 2``.
    """
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    if gamma < 0:
        raise DomainError(f"gamma must be nonnegative, got {gamma}")
    lower, upper = [], []
    for i in range(1, k + 1):
        nominal = (k + 1 - i) / (k + 1)
        width = i * (k + 1 - i) / 2.0
        lower.append(nominal - gamma / 3.0 * width)
        upper.append(nominal + gamma * width)
    return lower, upper


@dataclass(frozen=True)
class DeltaEnvelope:
    """Per-school bounds ``lower[i-1] <= drift(x_i) <= upper[i-1]``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __init__(self, lower: Sequence[float], upper: Sequence[float]) -> None:
        lo = tuple(float(v) for v in lower)
        hi = tuple(float(v) for v in upper)
        if len(lo) != len(hi):
            raise DomainError("envelope sides differ in length")
        for i, (a, b) in enumerate(zip(lo, hi), start=1):
            if a > b:
                raise DomainError(f"envelope lower bound exceeds upper at index {i}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def __len__(self) -> int:
        return len(self.lower)

    @classmethod
    def universal(cls, k: int) -> "DeltaEnvelope":
        return cls([DRIFT_MIN] * k, [DRIFT_MAX] * k)

    @classmethod
    def from_intervals(cls, lower: Sequence[float], upper: Sequence[float]) -> "DeltaEnvelope":
        """Tightest drift bounds for schools known to lie in ``[lower_i, upper_i]``.

        Intervals are intersected with [0, 1].  ``drift`` is a parabola with
        its minimum at 1/3, so the minimum is taken at 1/3 when the interval
        straddles it and the maximum at whichever endpoint is farther away.
        """
        lo_env, hi_env = [], []
        for a, b in zip(lower, upper):
            a, b = max(a, 0.0), min(b, 1.0)
            if a > b:
                raise DomainError(f"empty school interval [{a}, {b}]")
            lo = drift(min(max(ONE_THIRD, a), b))
            # rounding can put the endpoints a ulp below the vertex for tiny intervals
            lo_env.append(lo)
            hi_env.append(max(drift(a), drift(b), lo))
        return cls(lo_env, hi_env)


def refined_envelope(k: int, gamma: float) -> DeltaEnvelope:
    """Drift envelope implied by the per-school sandwich of ``xi_sandwich``."""
    lower, upper = xi_sandwich(k, gamma)
    return DeltaEnvelope.from_intervals(lower, upper)


def _check_envelope(k: int, envelope: DeltaEnvelope) -> None:
    if len(envelope) != k:
        raise DomainError(f"envelope has {len(envelope)} entries, expected {k}")


def xi_sandwich_general(k: int, gamma: float, envelope: DeltaEnvelope) -> tuple[list[float], list[float]]:
    """Per-school bounds from an arbitrary drift envelope.

    For school ``i``::

        nominal + gamma (k+1-i)/(k+1) sum_{j<i} j d_j
                + gamma i/(k+1) sum_{j=1}^{k+1-i} j d_{k+1-j}

    with ``d`` the lower (resp. upper) envelope.
    """
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    _check_envelope(k, envelope)

    def side(d: tuple[float, ...]) -> list[float]:
        out = []
        for i in range(1, k + 1):
            head = sum(j * d[j - 1] for j in range(1, i))
            tail = sum(j * d[k - j] for j in range(1, k + 2 - i))
            out.append((k + 1 - i) / (k + 1) + gamma * (k + 1 - i) / (k + 1) * head + gamma * i / (k + 1) * tail)
        return out

    return side(envelope.lower), side(envelope.upper)


def xi_neighbor_bound(k: int, i: int, x_prev: float, gamma: float,
                      envelope: DeltaEnvelope) -> tuple[float, float]:
    """Bounds on ``x_i`` given the school just above it."""
    if not 1 <= i <= k:
        raise DomainError(f"index {i} outside 1..{k}")
    _check_envelope(k, envelope)
    ratio = (k + 1 - i) / (k + 2 - i)
    lo_sum = sum(j * envelope.lower[k - j] for j in range(1, k + 2 - i))
    hi_sum = sum(j * envelope.upper[k - j] for j in range(1, k + 2 - i))
    scale = gamma / (k + 2 - i)
    return ratio * x_prev + scale * lo_sum, ratio * x_prev + scale * hi_sum


def forward_sandwich(k: int, gamma: float, envelope: DeltaEnvelope) -> tuple[list[float], list[float]]:
    """Chain ``xi_neighbor_bound`` down from ``x_0 = 1``.

    Each step is increasing in ``x_prev``, so feeding the previous lower
    (upper) bound gives a lower (upper) bound.
    """
    lower, upper = [], []
    lo_prev = hi_prev = 1.0
    for i in range(1, k + 1):
        lo, _ = xi_neighbor_bound(k, i, lo_prev, gamma, envelope)
        _, hi = xi_neighbor_bound(k, i, hi_prev, gamma, envelope)
        lower.append(lo)
        upper.append(hi)
        lo_prev, hi_prev = lo, hi
    return lower, upper


def top_school_lower_bound(k: int, gamma: float, envelope: Optional[DeltaEnvelope] = None) -> float:
    """Lower bound on ``x_1``; with the refined envelope it can exceed ``k/(k+1)``."""
    envelope = envelope or refined_envelope(k, gamma)
    lower, _ = xi_sandwich_general(k, gamma, envelope)
    return lower[0]


def bottom_school_upper_bound(k: int, gamma: float, envelope: Optional[DeltaEnvelope] = None) -> float:
    envelope = envelope or refined_envelope(k, gamma)
    _, upper = xi_sandwich_general(k, gamma, envelope)
    return upper[-1]


@dataclass(frozen=True)
class BoundsReport:
    gamma: float
    k: int
    c: float
    h_gamma: float
    above_two_thirds_cap: float
    m_gamma_c: float
    p_gamma: float
    c_star: float
    k_gamma: float
    xi_lower: tuple[float, ...]
    xi_upper: tuple[float, ...]


def bounds_report(gamma: float, k: int, c: Optional[float] = None) -> BoundsReport:
    """Evaluate every bound at ``gamma``; ``c`` defaults to the payoff-ceiling argmin."""
    ceiling = p_of_gamma(gamma)
    c = ceiling.c_star if c is None else c
    lower, upper = xi_sandwich(k, gamma)
    return BoundsReport(
        gamma=gamma,
        k=k,
        c=c,
        h_gamma=h_of_gamma(gamma),
        above_two_thirds_cap=above_two_thirds_cap(gamma),
        m_gamma_c=m_of_gamma_c(gamma, c),
        p_gamma=ceiling.p,
        c_star=ceiling.c_star,
        k_gamma=rational_budget(ceiling.p),
        xi_lower=tuple(lower),
        xi_upper=tuple(upper),
    )
