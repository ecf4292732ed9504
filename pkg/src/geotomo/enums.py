"""Enumerations for geotomo.

This module provides string enums for chart kinds, suites and solver
switches so configuration files and reports use stable names.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
from enum import StrEnum

# =============================================================================
# CHARTS
# =============================================================================


class ChartKind(StrEnum):
    """Closed-form metric charts for the transversal manifold M0."""

    EUCLIDEAN_DISC = "euclidean_disc"
    SPHERICAL_CAP = "spherical_cap"
    HYPERBOLIC_DISC = "hyperbolic_disc"


# =============================================================================
# SUITES
# =============================================================================


class Suite(StrEnum):
    """Experiment suites runnable from the CLI."""

    GEOMETRY = "geometry"
    SANTALO = "santalo"
    RAYTRANSFORM = "raytransform"
    MOLLIFY = "mollify"
    G0 = "g0"
    CGO = "cgo"
    CARLEMAN = "carleman"
    FORWARD = "forward"
    THEOREM2 = "theorem2"
    ALL = "all"


# =============================================================================
# SOLVER SWITCHES
# =============================================================================


class NormalRoute(StrEnum):
    """How the normal operator T*T is evaluated.

    TRANSPOSE uses the sparse transpose of the assembled forward matrix and is
    exactly symmetric; TRACED composes the footprint-traced adjoint with the
    forward transform.
    """

    TRANSPOSE = "transpose"
    TRACED = "traced"


class X1Closure(StrEnum):
    """Closure of the x1 difference operator on the extended interval."""

    ANTIPERIODIC = "antiperiodic"
    PERIODIC = "periodic"


class Regularity(StrEnum):
    """Regularity tag of a test conductivity."""

    SMOOTH = "smooth"
    CUSP = "cusp"
