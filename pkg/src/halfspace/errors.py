"""Exception and warning types shared across the package."""


class HalfspaceError(Exception):
    """Base class for all package errors."""


class InputDomainError(HalfspaceError, ValueError):
    """Raised for non-finite or otherwise inadmissible numeric input."""


class SingularityError(HalfspaceError, ValueError):
    """Raised when a kernel is evaluated at its singular point."""


class TimeDomainError(HalfspaceError, ValueError):
    """Raised when an operator requires t > 0 and receives t <= 0."""


class SolenoidalityError(HalfspaceError, ValueError):
    """Raised when an operator requires divergence-free input.

    Carries the measured residual so callers can report it.
    """

    def __init__(self, message, div_residual=None, trace_residual=None):
        super().__init__(message)
        self.div_residual = div_residual
        self.trace_residual = trace_residual


class CompatibilityError(HalfspaceError, ValueError):
    """Raised when Dirichlet data violates the boundary compatibility condition."""

    def __init__(self, message, trace_magnitude=None):
        super().__init__(message)
        self.trace_magnitude = trace_magnitude


class SolverError(HalfspaceError, RuntimeError):
    """Raised when a linear solve inside a projection or BVP fails."""


class AccuracyWarning(UserWarning):
    """Emitted when an internal quadrature error estimate exceeds its tolerance."""
