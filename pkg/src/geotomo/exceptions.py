"""Exception hierarchy for geotomo.

Numerical diagnostics return reports; the exceptions below signal inputs the
toolkit cannot evaluate or solves that did not reach their contract.
"""

from __future__ import annotations

# =============================================================================
# CORE CLASSES
# =============================================================================


class GeotomoError(Exception):
    """Base class for all geotomo errors."""


class DomainError(GeotomoError, ValueError):
    """A point lies outside the chart, grid or interpolation domain."""


class GeodesicRangeError(DomainError):
    """A geodesic left the enlarged manifold before the requested length."""


class PreconditionError(GeotomoError, ValueError):
    """A geometric precondition (convex hull, admissibility) does not hold."""


class ConfigError(GeotomoError, ValueError):
    """The experiment configuration is invalid."""


class RateFitError(GeotomoError, ValueError):
    """Too few positive samples remain for a log-log slope fit."""


class TrappedGeodesicError(GeotomoError, RuntimeError):
    """A geodesic did not exit within the time budget."""

    def __init__(self, message: str, *, max_time: float, n_trapped: int) -> None:
        super().__init__(message)
        self.max_time = max_time
        self.n_trapped = n_trapped


class NonconvergenceError(GeotomoError, RuntimeError):
    """An iteration stopped without meeting its tolerance."""

    def __init__(self, message: str, *, residual: float, iterations: int) -> None:
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ExceptionalTauError(GeotomoError, RuntimeError):
    """The shifted operator is numerically singular at this tau."""

    def __init__(self, message: str, *, tau: float, condition: float) -> None:
        super().__init__(message)
        self.tau = tau
        self.condition = condition


class NeumannDivergenceError(GeotomoError, RuntimeError):
    """The perturbation operator K has norm >= 1; a larger tau is needed."""

    def __init__(self, message: str, *, norm: float) -> None:
        super().__init__(message)
        self.norm = norm


class AssemblyError(GeotomoError, RuntimeError):
    """A discrete operator could not be assembled or is invalid."""
