"""Divergence-form conductivity solver on box charts.

The weak form ``int gamma <grad u, grad v>_g dV_g`` is discretized edge by
edge: every grid edge carries the coefficient ``gamma |g|^(1/2) g^(ii)`` at
its midpoint times the trapezoid area of its dual face. The resulting
stiffness matrix is symmetric with constants in its kernel, so the Schur
complement onto the boundary is an exactly symmetric, flux-conserving
Dirichlet-to-Neumann matrix.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

# Third-party
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.typing import NDArray

# Project/Local
from .._internal import get_logger, log_stage
from ..constants import SOLVER_RESIDUAL_TOLERANCE
from ..enums import Regularity
from ..exceptions import AssemblyError, NonconvergenceError
from .chart import BoxChart

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
FloatArray = NDArray[np.float64]
GammaFn = Callable[[FloatArray], FloatArray]
BoundaryData = Any
"""Boundary values ``(m,)``, a nodal field, or a callable on points."""


# =============================================================================
# CORE CLASSES
# =============================================================================
@dataclass(frozen=True)
class ConductivityField:
    """A conductivity sampled on the nodes of a chart.

    When ``fn`` is given, edge coefficients are evaluated at edge midpoints;
    otherwise the nodal coefficients are averaged.

    Attributes:
        values: Nodal values.
        fn: The conductivity as a function of points, if known.
        regularity: Smooth or cusp-type.
    """

    values: FloatArray
    fn: GammaFn | None = None
    regularity: Regularity = Regularity.SMOOTH

    @classmethod
    def from_function(
        cls,
        chart: BoxChart,
        fn: GammaFn,
        regularity: Regularity = Regularity.SMOOTH,
    ) -> ConductivityField:
        values = np.asarray(fn(chart.grid.points()), dtype=float)
        values = values.reshape(chart.grid.shape)
        return cls(values=values, fn=fn, regularity=regularity)

    @classmethod
    def constant(cls, chart: BoxChart, value: float = 1.0) -> ConductivityField:
        return cls.from_function(chart, lambda x: np.full(x.shape[:-1], value))

    @property
    def is_positive(self) -> bool:
        return bool(np.all(np.isfinite(self.values)) and np.all(self.values > 0.0))

    def at(self, points: FloatArray) -> FloatArray:
        if self.fn is None:
            msg = "Conductivity has no closed form; only nodal values are known"
            raise ValueError(msg)
        return np.asarray(self.fn(points), dtype=float)

    def scaled(self, chart: BoxChart, factor: GammaFn) -> ConductivityField:
        """``factor * gamma``, keeping the closed form when there is one."""
        nodal = np.asarray(factor(chart.grid.points()), dtype=float)
        values = self.values * nodal.reshape(self.values.shape)
        if self.fn is None:
            return ConductivityField(values=values, regularity=self.regularity)
        gamma_fn = self.fn

        def product(x: FloatArray) -> FloatArray:
            return np.asarray(factor(x), dtype=float) * np.asarray(gamma_fn(x))

        return ConductivityField(values=values, fn=product, regularity=self.regularity)


class DirichletSolver:
    """Factorized stiffness of ``div_g(gamma grad_g u) = 0`` on a box chart.

    The interior block is factorized once; the solver is immutable afterwards
    and safe to share between threads.

    Args:
        chart: The box chart.
        gamma: Conductivity on the chart nodes.

    Raises:
        AssemblyError: If an edge coefficient is not finite and positive.

    Example:
        >>> chart = BoxChart.segment((9, 5, 5))
        >>> solver = DirichletSolver(chart, ConductivityField.constant(chart))
        >>> u = solver.solve(lambda x: x[:, 0])
        >>> bool(np.allclose(u, chart.grid.mesh()[0]))
        True
    """

    def __init__(self, chart: BoxChart, gamma: ConductivityField) -> None:
        self.chart = chart
        self.gamma = gamma
        stiffness = assemble_stiffness(chart, gamma)
        interior = chart.interior
        boundary = chart.boundary.flat
        rows_i = stiffness[interior]
        rows_b = stiffness[boundary]
        self.stiffness = stiffness
        self.k_ii = rows_i[:, interior].tocsc()
        self.k_ib = rows_i[:, boundary].tocsr()
        self.k_bi = rows_b[:, interior].tocsr()
        self.k_bb = rows_b[:, boundary].tocsr()
        self._lu = spla.splu(self.k_ii)
        log_stage(
            logger,
            "dirichlet_factorized",
            chart=chart.name,
            n_interior=int(interior.size),
            n_boundary=int(boundary.size),
        )

    def boundary_values(self, f: BoundaryData) -> Any:
        """Boundary values from a callable, a nodal field or a trace."""
        if callable(f):
            return np.asarray(f(self.chart.boundary.points))
        values = np.asarray(f)
        if values.shape == self.chart.grid.shape:
            return self.chart.trace(values)
        if values.shape[0] != self.chart.boundary.size:
            msg = (
                f"Boundary data has {values.shape[0]} rows, "
                f"chart has {self.chart.boundary.size} boundary nodes"
            )
            raise ValueError(msg)
        return values

    def extend(self, f: Any) -> Any:
        """Interior values of the extensions of boundary columns ``f``."""
        rhs = -(self.k_ib @ f)
        if np.iscomplexobj(rhs):
            real = self._lu.solve(np.ascontiguousarray(rhs.real))
            imag = self._lu.solve(np.ascontiguousarray(rhs.imag))
            return real + 1j * imag
        return self._lu.solve(np.ascontiguousarray(rhs, dtype=float))

    def solve(self, f: BoundaryData) -> Any:
        """Nodal solution with Dirichlet data ``f``.

        Raises:
            NonconvergenceError: If the discrete residual exceeds the tolerance.
        """
        trace = self.boundary_values(f)
        inner = self.extend(trace)
        residual = self.residual(inner, trace)
        if residual > SOLVER_RESIDUAL_TOLERANCE:
            msg = f"Dirichlet solve residual {residual:.3e} exceeds tolerance"
            raise NonconvergenceError(msg, residual=residual, iterations=1)
        return self.chart.extend(inner, trace)

    def residual(self, inner: Any, trace: Any) -> float:
        """Relative residual of the interior equations."""
        load = self.k_ib @ trace
        r = self.k_ii @ inner + load
        scale = max(np.linalg.norm(load), np.linalg.norm(self.k_ii @ inner))
        if scale == 0.0:
            return float(np.linalg.norm(r))
        return float(np.linalg.norm(r) / scale)

    def flux(self, f: Any) -> Any:
        """Integrated boundary currents ``S f`` (Schur complement applied to f)."""
        trace = self.boundary_values(f)
        return self.k_bb @ trace + self.k_bi @ self.extend(trace)

    def energy(self, u: Any, v: Any) -> Any:
        """Discrete ``int gamma <grad u, grad v>_g`` of two nodal fields."""
        return np.ravel(u) @ (self.stiffness @ np.ravel(v))


# =============================================================================
# PUBLIC API
# =============================================================================


def assemble_stiffness(chart: BoxChart, gamma: ConductivityField) -> sp.csr_matrix:
    """Edge-based stiffness matrix of ``-div_g(gamma grad_g .)`` (weak form).

    Raises:
        AssemblyError: If any edge coefficient is not finite and positive.
    """
    grid = chart.grid
    index = np.arange(grid.size).reshape(grid.shape)
    rows: list[NDArray[np.int64]] = []
    cols: list[NDArray[np.int64]] = []
    data: list[FloatArray] = []
    for axis in range(grid.dim):
        lo, hi = _edge_slices(grid.dim, axis)
        p, q = index[lo].ravel(), index[hi].ravel()
        coeff = _edge_coefficient(chart, gamma, axis)
        k = (coeff * _dual_area(chart, axis) / grid.spacing[axis]).ravel()
        if not np.all(np.isfinite(k)) or np.any(k <= 0.0):
            msg = (
                f"Stiffness on chart {chart.name!r} is indefinite along axis {axis}: "
                f"min edge coefficient {np.nanmin(k):.4g}"
            )
            raise AssemblyError(msg)
        rows += [p, q, p, q]
        cols += [p, q, q, p]
        data += [k, k, -k, -k]
    matrix = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid.size, grid.size),
    )
    return matrix.tocsr()


def smooth_bump(
    center: tuple[float, ...], width: float, amplitude: float = 0.2
) -> GammaFn:
    """``1 + amplitude * exp(1 - 1 / (1 - |x - c|^2 / w^2))`` as a callable.

    Equals one, with all derivatives, outside the ball of radius ``width``.
    """
    c = np.asarray(center, dtype=float)

    def gamma(x: FloatArray) -> FloatArray:
        s2 = np.sum((np.asarray(x, dtype=float) - c) ** 2, axis=-1) / width**2
        inside = s2 < 1.0
        bump = np.exp(1.0 - 1.0 / (1.0 - np.where(inside, s2, 0.0)))
        return 1.0 + amplitude * np.where(inside, bump, 0.0)

    return gamma


def solve_dirichlet(
    chart: BoxChart, gamma: ConductivityField, f: BoundaryData
) -> Any:
    """Solve ``div_g(gamma grad_g u) = 0`` with ``u = f`` on the boundary.

    Args:
        chart: The box chart.
        gamma: Conductivity.
        f: Boundary values, a nodal field (its trace is used) or a callable.

    Returns:
        The nodal solution, shaped like the grid.

    Raises:
        AssemblyError: If the conductivity or metric makes the system indefinite.
        NonconvergenceError: If the discrete residual exceeds 1e-9.

    Examples:
        >>> chart = BoxChart.segment((9, 5, 5))
        >>> gamma = ConductivityField.constant(chart)
        >>> u = solve_dirichlet(chart, gamma, lambda x: x[:, 0] ** 2 - x[:, 1] ** 2)
        >>> x1, x2, _ = chart.grid.mesh()
        >>> bool(np.abs(u - (x1**2 - x2**2)).max() < 1e-10)
        True
    """
    return DirichletSolver(chart, gamma).solve(f)


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _edge_slices(dim: int, axis: int) -> tuple[tuple[Any, ...], tuple[Any, ...]]:
    lo: list[Any] = [slice(None)] * dim
    hi: list[Any] = [slice(None)] * dim
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    return tuple(lo), tuple(hi)


def _edge_coefficient(
    chart: BoxChart, gamma: ConductivityField, axis: int
) -> FloatArray:
    """``gamma |g|^(1/2) g^(axis, axis)`` on the edges along ``axis``."""
    grid = chart.grid
    lo, hi = _edge_slices(grid.dim, axis)
    if gamma.fn is not None:
        points = grid.points().reshape(*grid.shape, grid.dim)[lo].copy()
        points[..., axis] += 0.5 * grid.spacing[axis]
        metric = chart.metric_at(points)
        sqrt_det = np.sqrt(np.prod(metric, axis=-1))
        return gamma.at(points) * sqrt_det / metric[..., axis]
    metric_nodes = chart.nodal_metric
    sqrt_det = np.sqrt(np.prod(np.stack(metric_nodes), axis=0))
    nodal = gamma.values * sqrt_det / metric_nodes[axis]
    return 0.5 * (nodal[lo] + nodal[hi])


def _dual_area(chart: BoxChart, axis: int) -> FloatArray:
    """Trapezoid area of the dual face of each edge along ``axis``."""
    grid = chart.grid
    shape = list(grid.shape)
    shape[axis] -= 1
    area = np.ones(shape)
    for j in range(grid.dim):
        if j == axis:
            continue
        view = [1] * grid.dim
        view[j] = grid.shape[j]
        area = area * grid.weights_1d(j, "trapezoid").reshape(view)
    return area
