"""Domain types and closed-form utilities for the continuum school model.

Schools live on [0, 1]; school ``x`` admits a student whose score is at
least ``x`` and is worth ``x`` to her.  Scores are uniform on [0, 1], so the
student is admitted to ``x`` with probability ``1 - x`` and all admissions
are driven by the same score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

from .errors import DomainError, OrderingError, UnsupportedCorrelationError

BOUNDARY_TOL = 1e-12
THRESHOLD_TOL = 1e-12


@dataclass(frozen=True)
class BiasParams:
    """Behavioral coefficients of a loss-averse student.

    ``tau`` scales the subjective value of a school, ``lam`` is the
    loss-aversion multiplier and ``gamma = (lam - 1) * tau`` is the only
    combination that enters expected utilities.
    """

    tau: float
    lam: float
    gamma: float

    def __post_init__(self) -> None:
        if self.tau < 0:
            raise DomainError(f"tau must be nonnegative, got {self.tau}")
        if self.lam < 1:
            raise DomainError(f"lambda must be >= 1, got {self.lam}")
        if self.gamma < 0:
            raise DomainError(f"gamma must be nonnegative, got {self.gamma}")
        if not math.isclose(self.gamma, (self.lam - 1.0) * self.tau, rel_tol=1e-12, abs_tol=1e-15):
            raise DomainError(
                f"gamma={self.gamma} inconsistent with (lambda - 1) * tau = {(self.lam - 1.0) * self.tau}"
            )

    @classmethod
    def from_gamma(cls, gamma: float) -> "BiasParams":
        # canonical decomposition: tau = gamma, lambda = 2
        return cls(tau=float(gamma), lam=2.0, gamma=float(gamma))

    @classmethod
    def from_tau_lambda(cls, tau: float, lam: float) -> "BiasParams":
        return cls(tau=float(tau), lam=float(lam), gamma=(float(lam) - 1.0) * float(tau))

    @property
    def rational(self) -> bool:
        return self.gamma == 0.0


BiasLike = Union[BiasParams, float, int]


def as_bias(bias: BiasLike) -> BiasParams:
    """Accept either a ``BiasParams`` or a bare gamma."""
    if isinstance(bias, BiasParams):
        return bias
    return BiasParams.from_gamma(float(bias))


@dataclass(frozen=True)
class SchoolSpec:
    """A school of the finite model: acceptance probability and value."""

    p: float
    v: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"acceptance probability must lie in [0, 1], got {self.p}")
        if self.v < 0:
            raise DomainError(f"school value must be nonnegative, got {self.v}")


@dataclass(frozen=True)
class Portfolio:
    """Strictly decreasing school positions ``x_1 > ... > x_k`` in [0, 1].

    The sentinel ``x_0 = 1`` is implicit and never stored.  The endpoints are
    closed; bounds are checked with an absolute slack of ``BOUNDARY_TOL``.
    Consecutive entries must decrease strictly (solved portfolios have tail
    gaps far below any fixed absolute tolerance).
    """

    schools: tuple[float, ...]

    def __init__(self, schools: Sequence[float]) -> None:
        xs = tuple(float(x) for x in schools)
        if not xs:
            raise DomainError("a portfolio needs at least one school")
        for x in xs:
            if not math.isfinite(x) or x < -BOUNDARY_TOL or x > 1.0 + BOUNDARY_TOL:
                raise DomainError(f"school position {x!r} outside [0, 1]")
        for i, (hi, lo) in enumerate(zip(xs, xs[1:]), start=1):
            if not hi > lo:
                raise OrderingError(f"portfolio not strictly decreasing at index {i}: {hi!r} <= {lo!r}")
        object.__setattr__(self, "schools", xs)

    @property
    def k(self) -> int:
        return len(self.schools)

    def __len__(self) -> int:
        return len(self.schools)

    def __iter__(self):
        return iter(self.schools)

    def __getitem__(self, i):
        return self.schools[i]

    @classmethod
    def equally_spaced(cls, k: int) -> "Portfolio":
        """The rational optimum ``x_i = (k + 1 - i) / (k + 1)``."""
        if k < 1:
            raise DomainError(f"k must be positive, got {k}")
        return cls([(k + 1 - i) / (k + 1) for i in range(1, k + 1)])


@dataclass(frozen=True)
class GapProfile:
    """Selectivity gaps ``Delta_i = x_{i-1} - x_i`` with ``x_0 = 1``."""

    deltas: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.deltas)

    def __iter__(self):
        return iter(self.deltas)

    def __getitem__(self, i):
        return self.deltas[i]


def _with_sentinel(portfolio: Portfolio) -> tuple[float, ...]:
    return (1.0,) + portfolio.schools


def perceived_utility(portfolio: Portfolio, bias: BiasLike) -> float:
    """Perceived expected utility of a continuum portfolio.

    Each school costs ``gamma * (1 - x) * x**2`` in expected gain-loss terms
    and is attended with probability ``x_{i-1} - x_i``.
    """
    gamma = as_bias(bias).gamma
    xs = _with_sentinel(portfolio)
    total = 0.0
    for prev, x in zip(xs, xs[1:]):
        total += -gamma * (1.0 - x) * x * x + x * (prev - x)
    return total


def true_payoff(portfolio: Portfolio) -> float:
    """Expected value of the attended school, with no behavioral terms."""
    xs = _with_sentinel(portfolio)
    return sum(x * (prev - x) for prev, x in zip(xs, xs[1:]))


def bias_cost(portfolio: Portfolio) -> float:
    """``sum_i x_i^2 (1 - x_i)``; perceived = payoff - gamma * bias_cost."""
    return sum(x * x * (1.0 - x) for x in portfolio.schools)


def single_school_utility(x: float, bias: BiasLike) -> float:
    """The cubic ``x (1 - x) (1 - gamma x)`` for a one-school portfolio."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"school position must lie in [0, 1], got {x}")
    gamma = as_bias(bias).gamma
    return x * (1.0 - x) * (1.0 - gamma * x)


def gap_profile(portfolio: Portfolio) -> GapProfile:
    xs = _with_sentinel(portfolio)
    return GapProfile(tuple(prev - x for prev, x in zip(xs, xs[1:])))


def perceived_utility_finite(schools: Sequence[SchoolSpec], bias: BiasLike) -> float:
    """Perceived expected utility of a finite list of ``(p, v)`` schools.

    Attendance probabilities are only defined here for threshold-correlated
    schools (``v = 1 - p``), where school ``i`` is attended exactly when the
    score lands in ``[v_i, v_{i-1})``.  Any other correlation structure is
    rejected.
    """
    gamma = as_bias(bias).gamma
    schools = list(schools)
    for i, (hi, lo) in enumerate(zip(schools, schools[1:]), start=1):
        if not hi.v > lo.v:
            raise OrderingError(f"schools must be sorted strictly decreasing by value (index {i})")
    for s in schools:
        if abs(s.v - (1.0 - s.p)) > THRESHOLD_TOL:
            raise UnsupportedCorrelationError(
                f"school (p={s.p}, v={s.v}) is not threshold-correlated (v != 1 - p); "
                "general admission correlation is not supported"
            )
    bias_term = -sum(gamma * s.p * (1.0 - s.p) * s.v for s in schools)
    consumption = 0.0
    upper = 1.0
    for s in schools:
        consumption += s.v * (upper - s.v)
        upper = s.v
    return bias_term + consumption


def threshold_schools(portfolio: Portfolio) -> list[SchoolSpec]:
    """Finite-model view of a continuum portfolio: ``(p, v) = (1 - x, x)``."""
    return [SchoolSpec(p=1.0 - x, v=x) for x in portfolio.schools]
