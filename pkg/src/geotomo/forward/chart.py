"""Box charts with a diagonal metric, their boundary nodes and the ε-masks.

A ``BoxChart`` is the coordinate box ``M = [0, 1] x [-a, a]^(n-1)`` carrying a
diagonal metric ``g = diag(g_11, ..., g_nn)``. The weight ``phi(x) = x1``
fixes the partition of the boundary into ``dM_-,eps = {d_nu phi < eps}`` and
``dM_+,eps = {d_nu phi >= eps}``.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from collections.abc import Callable
from dataclasses import dataclass
from functools import cached_property
from typing import Any

# Third-party
import numpy as np
from numpy.typing import NDArray

# Project/Local
from ..constants import DEFAULT_EPSILON, DEFAULT_FORWARD_SHAPE, FORWARD_HALF_WIDTH
from ..exceptions import DomainError
from ..geometry import AdmissibleCylinder
from ..grids import BoxGrid, DiagonalCalculus, QuadratureRule, face_slices

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
FloatArray = NDArray[np.float64]
BoolArray = NDArray[np.bool_]
MetricFn = Callable[[FloatArray], FloatArray]
"""Maps points ``(..., d)`` to diagonal metric components ``(..., d)``."""


# =============================================================================
# CORE CLASSES
# =============================================================================
@dataclass(frozen=True)
class BoundaryNodes:
    """Boundary nodes of a box chart in C order.

    Attributes:
        flat: Flat node indices into the grid.
        points: Node coordinates, shape ``(m, d)``.
        weights: Trapezoid surface weights including the induced area factor.
            Edge and corner nodes collect the weights of every face they touch.
        dphi: ``d_nu phi`` for ``phi = x1`` with the averaged g-unit normal.
    """

    flat: NDArray[np.int64]
    points: FloatArray
    weights: FloatArray
    dphi: FloatArray

    @property
    def size(self) -> int:
        return int(self.flat.size)

    def masks(self, epsilon: float = DEFAULT_EPSILON) -> tuple[BoolArray, BoolArray]:
        """``(minus, plus)`` masks; they partition the boundary nodes."""
        minus = self.dphi < epsilon
        return minus, ~minus


@dataclass(frozen=True)
class BoxChart:
    """A coordinate box with a diagonal metric.

    Attributes:
        grid: Node grid of the box.
        metric_fn: Diagonal metric as a function of points; ``None`` is Euclidean.
        name: Label written into manifests.

    Examples:
        >>> chart = BoxChart.segment((5, 3, 3))
        >>> chart.boundary.size, chart.interior.size
        (42, 3)
    """

    grid: BoxGrid
    metric_fn: MetricFn | None = None
    name: str = "box"

    @classmethod
    def segment(
        cls,
        shape: tuple[int, ...] = DEFAULT_FORWARD_SHAPE,
        half_width: float = FORWARD_HALF_WIDTH,
        metric_fn: MetricFn | None = None,
    ) -> BoxChart:
        """``[0, 1] x [-half_width, half_width]^(n-1)``."""
        dim = len(shape)
        grid = BoxGrid(
            lower=(0.0,) + (-half_width,) * (dim - 1),
            upper=(1.0,) + (half_width,) * (dim - 1),
            shape=tuple(shape),
        )
        return cls(grid=grid, metric_fn=metric_fn, name="segment")

    @classmethod
    def admissible(
        cls,
        cylinder: AdmissibleCylinder,
        shape: tuple[int, int, int] = (17, 9, 9),
        half_width: float | None = None,
    ) -> BoxChart:
        """Box inscribed in an admissible cylinder, metric ``c (e + g0)``."""
        a = cylinder.base.radius / np.sqrt(2.0) if half_width is None else half_width
        grid = BoxGrid(
            lower=(cylinder.x1_min, -a, -a),
            upper=(cylinder.x1_max, a, a),
            shape=shape,
        )
        return cls(grid=grid, metric_fn=cylinder.metric_diagonal, name="admissible")

    # -- metric ---------------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.grid.dim

    def metric_at(self, points: FloatArray) -> FloatArray:
        """Diagonal metric components at ``points`` (shape ``(..., d)``)."""
        x = np.asarray(points, dtype=float)
        if self.metric_fn is None:
            return np.ones(x.shape)
        values = np.broadcast_to(np.asarray(self.metric_fn(x), dtype=float), x.shape)
        if np.any(values <= 0.0) or not np.all(np.isfinite(values)):
            msg = f"Metric of chart {self.name!r} is not positive definite"
            raise DomainError(msg)
        return values

    @cached_property
    def nodal_metric(self) -> list[FloatArray]:
        comps = self.metric_at(self.grid.points())
        return [comps[:, i].reshape(self.grid.shape) for i in range(self.dim)]

    def calculus(self, rule: QuadratureRule = "simpson") -> DiagonalCalculus:
        return DiagonalCalculus(self.grid, self.nodal_metric, rule)

    def scaled(self, c_fn: Callable[[FloatArray], FloatArray]) -> BoxChart:
        """The same box with the metric multiplied by ``c``."""

        def metric(points: FloatArray) -> FloatArray:
            c = np.asarray(c_fn(points), dtype=float)
            return c[..., None] * self.metric_at(points)

        return BoxChart(grid=self.grid, metric_fn=metric, name=f"{self.name}*c")

    # -- boundary -------------------------------------------------------------

    @cached_property
    def boundary(self) -> BoundaryNodes:
        grid = self.grid
        calc = self.calculus(rule="trapezoid")
        weights = np.zeros(grid.shape)
        normal = np.zeros((grid.dim, *grid.shape))
        for axis, side, index in face_slices(grid.dim):
            face = grid.face_weights(axis, "trapezoid")
            weights[index] += face * calc.face_area_factor(axis, index)
            normal[axis][index] = side
        # Averaged covector normal N, raised and normalized with g.
        inverse = [1.0 / g for g in self.nodal_metric]
        length = np.sqrt(sum(gi * n**2 for gi, n in zip(inverse, normal, strict=True)))
        mask = grid.boundary_mask()
        flat = np.flatnonzero(mask.ravel())
        dphi = (inverse[0] * normal[0])[mask] / length[mask]
        return BoundaryNodes(
            flat=flat,
            points=grid.points()[flat],
            weights=weights[mask],
            dphi=dphi,
        )

    @cached_property
    def interior(self) -> NDArray[np.int64]:
        return np.flatnonzero(~self.grid.boundary_mask().ravel())

    def masks(self, epsilon: float = DEFAULT_EPSILON) -> tuple[BoolArray, BoolArray]:
        return self.boundary.masks(epsilon)

    def trace(self, u: Any) -> Any:
        """Boundary values of a nodal field."""
        return np.asarray(u).reshape(-1)[self.boundary.flat]

    def extend(self, interior: Any, boundary: Any) -> Any:
        """Nodal field from interior and boundary values."""
        dtype = np.result_type(np.asarray(interior), np.asarray(boundary))
        out = np.empty(self.grid.size, dtype=dtype)
        out[self.interior] = interior
        out[self.boundary.flat] = boundary
        return out.reshape(self.grid.shape)
