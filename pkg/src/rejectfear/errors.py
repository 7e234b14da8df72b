from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the region where a formula is defined."""


class OrderingError(DomainError):
    """Schools were not supplied in strictly decreasing order."""


class UnsupportedCorrelationError(DomainError):
    """A finite school list is not threshold-correlated (``v != 1 - p``)."""


class SolverError(RuntimeError):
    """Shooting found no admissible critical point.

    ``grid`` holds the scanned shooting parameters and ``shots`` the boundary
    mismatch at each, so a caller can see where brackets were (not) found.
    """

    def __init__(self, message: str, grid=None, shots=None):
        super().__init__(message)
        self.grid = grid
        self.shots = shots


class ResourceError(RuntimeError):
    """A brute-force request exceeds the allowed enumeration size."""
