"""Optimal college application portfolios for students who fear rejection."""

__version__ = "0.1.0"

from .errors import DomainError, OrderingError, ResourceError, SolverError, UnsupportedCorrelationError
from .model import (
    BiasParams,
    GapProfile,
    Portfolio,
    SchoolSpec,
    gap_profile,
    perceived_utility,
    perceived_utility_finite,
    single_school_utility,
    true_payoff,
)
from .montecarlo import SimConfig, SimResult, simulate
from .solver import SolveConfig, SolveReport, foc_next, oracle_solve, solve, utility_is_increasing_in_k

__all__ = [
    "BiasParams",
    "DomainError",
    "GapProfile",
    "OrderingError",
    "Portfolio",
    "ResourceError",
    "SchoolSpec",
    "SimConfig",
    "SimResult",
    "SolveConfig",
    "SolveReport",
    "SolverError",
    "UnsupportedCorrelationError",
    "foc_next",
    "gap_profile",
    "oracle_solve",
    "perceived_utility",
    "perceived_utility_finite",
    "simulate",
    "single_school_utility",
    "solve",
    "true_payoff",
    "utility_is_increasing_in_k",
]
