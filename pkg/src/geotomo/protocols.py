"""Structural types shared across geotomo.

The geometry, sphere-bundle and ray-transform code only ever talks to a chart
through ``MetricChart``; any object with these members can be traced, sampled
and inverted on.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from collections.abc import Callable
from typing import Any, Protocol, runtime_checkable

# Third-party
import numpy as np
from numpy.typing import NDArray

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
FloatArray = NDArray[np.float64]
ScalarField = Callable[[FloatArray], NDArray[Any]]
"""Callable mapping points of shape ``(..., d)`` to values of shape ``(...)``."""

PhaseField = Callable[[FloatArray, FloatArray], NDArray[Any]]
"""Callable ``F(x, xi)`` on the unit sphere bundle."""


# =============================================================================
# PROTOCOLS
# =============================================================================


@runtime_checkable
class MetricChart(Protocol):
    """A coordinate chart carrying a Riemannian metric and a boundary.

    Arrays follow numpy broadcasting: points have shape ``(..., dim)`` and
    metric tensors ``(..., dim, dim)``. ``boundary_sdf`` is negative inside
    the manifold; the enlarged manifold is ``boundary_sdf <= margin``.
    """

    @property
    def dim(self) -> int:
        """Coordinate dimension (2 or 3)."""
        ...

    @property
    def margin(self) -> float:
        """Width of the enlargement, in sdf units."""
        ...

    @property
    def scale(self) -> float:
        """Characteristic length used for finite-difference steps."""
        ...

    def g_eval(self, x: FloatArray) -> FloatArray:
        """Metric tensor at ``x``."""
        ...

    def boundary_sdf(self, x: FloatArray) -> FloatArray:
        """Signed distance to the boundary (negative inside)."""
        ...

    def sdf_gradient(self, x: FloatArray) -> FloatArray:
        """Euclidean gradient of ``boundary_sdf``."""
        ...


@runtime_checkable
class BoundaryCurve(Protocol):
    """A 2D chart whose boundary is parameterized by an angle."""

    def boundary_point(self, theta: FloatArray) -> FloatArray:
        """Boundary point at parameter ``theta``."""
        ...

    def boundary_velocity(self, theta: FloatArray) -> FloatArray:
        """Derivative of ``boundary_point`` with respect to ``theta``."""
        ...
