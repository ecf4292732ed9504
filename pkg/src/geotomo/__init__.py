"""geotomo - desk-scale numerics for partial-data conductivity uniqueness.

The toolkit checks, on laptop-sized grids, the ingredients of a partial-data
uniqueness argument on admissible manifolds: the geodesic flow of a simple
transversal chart, the attenuated geodesic ray transform, complex geometrical
optics solutions, a boundary Carleman estimate and the Dirichlet-to-Neumann
identities that tie them together.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Project/Local
from .context import CheckResult, SuiteContext
from .enums import ChartKind, NormalRoute, Regularity, Suite, X1Closure
from .exceptions import (
    AssemblyError,
    ConfigError,
    DomainError,
    ExceptionalTauError,
    GeodesicRangeError,
    GeotomoError,
    NeumannDivergenceError,
    NonconvergenceError,
    PreconditionError,
    RateFitError,
    TrappedGeodesicError,
)
from .geometry import AdmissibleCylinder, ConformalDisc, PhaseState, geodesic_trace
from .harness import ExperimentConfig, default_config, load_config, run_suite
from .rates import RateReport, check_ladder, fit_slope, geometric_ladder, rate_report

# =============================================================================
# PUBLIC API
# =============================================================================
__all__ = [
    # Enums
    "ChartKind",
    "NormalRoute",
    "Regularity",
    "Suite",
    "X1Closure",
    # Exceptions
    "GeotomoError",
    "DomainError",
    "GeodesicRangeError",
    "PreconditionError",
    "ConfigError",
    "RateFitError",
    "TrappedGeodesicError",
    "NonconvergenceError",
    "ExceptionalTauError",
    "NeumannDivergenceError",
    "AssemblyError",
    # Geometry
    "ConformalDisc",
    "AdmissibleCylinder",
    "PhaseState",
    "geodesic_trace",
    # Rates
    "RateReport",
    "fit_slope",
    "rate_report",
    "geometric_ladder",
    "check_ladder",
    # Harness
    "CheckResult",
    "SuiteContext",
    "ExperimentConfig",
    "default_config",
    "load_config",
    "run_suite",
]
