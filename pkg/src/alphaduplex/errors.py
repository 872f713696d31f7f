"""Exception types shared across the package."""


class AlphaDuplexError(Exception):
    """Base class for all package-specific errors."""


class InvalidParameterError(AlphaDuplexError, ValueError):
    """A physical or numerical parameter is outside its valid range."""


class ConfigurationError(AlphaDuplexError):
    """A configuration (file, layout, grid) cannot be honored as requested."""


class QuadratureError(AlphaDuplexError):
    """Adaptive quadrature failed to reach the requested absolute tolerance.

    Carries the achieved error estimate so callers can decide whether the
    degraded result would still have been usable.
    """

    def __init__(self, message: str, achieved: float, requested: float):
        super().__init__(message)
        self.achieved = achieved
        self.requested = requested


class DegreeInsufficientError(AlphaDuplexError):
    """Polynomial fit residual exceeds the accuracy contract."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class InfeasiblePointError(AlphaDuplexError):
    """A point violates the constraint set where strict feasibility is required."""


class InfeasibleSpecError(AlphaDuplexError):
    """The constraint set has empty interior (e.g. N*p_b_min >= p_b_tot)."""


class StalledLineSearchError(AlphaDuplexError):
    """Backtracking produced a step below the minimum useful length."""


class UtilityDomainError(AlphaDuplexError):
    """Utility undefined at the given point (e.g. log of a zero rate)."""
