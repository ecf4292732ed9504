"""Attenuated geodesic ray transform, its adjoint and the normal operator.

The forward transform of grid fields is the sparse product ``S_lambda P``:
``P`` interpolates the unknowns (disc nodes) to the ray quadrature nodes by
tensor cubics and ``S_lambda`` holds the Simpson weights times
``exp(-lambda t)``. The adjoint is evaluated either as the weighted transpose
of that matrix or by tracing every interior direction back to its influx
footprint.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import math
from dataclasses import dataclass
from typing import Any

# Third-party
import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

# Project/Local
from .._internal import get_logger, log_stage
from ..constants import (
    CG_MAX_ITER,
    CG_TOLERANCE,
    DEFAULT_GEODESIC_STEP,
    DEFAULT_N_DIRECTIONS,
    LAMBDA_MAX,
    TANGENCY_CUTOFF,
)
from ..enums import NormalRoute
from ..exceptions import PreconditionError
from ..geometry.charts import metric_inner, orthonormal_frame, outward_normal
from ..geometry.geodesics import trace_batch
from ..grids import (
    IntArray,
    interpolation_matrix,
    nonuniform_lagrange,
    periodic_lagrange,
)
from ..protocols import FloatArray
from ..sphere_bundle import Influx, influx_rays
from .grid import FieldGrid
from .solvers import CGResult, conjugate_gradient

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
_FOOTPRINT_SLACK = 1e-8


# =============================================================================
# CORE CLASSES
# =============================================================================


@dataclass(frozen=True)
class Footprints:
    """Backward traces from every unknown node in ``n_directions`` directions.

    Attributes:
        node: Unknown index of each footprint.
        theta: Boundary angle of the influx point.
        alpha: Angle of the influx direction against the inward normal.
        mu: ``-<xi, nu>_g`` of the influx direction.
        tau: Backward exit time ``tau(x, -xi)``.
        n_directions: Directions per node.
        failed: Footprints whose influx direction points outward.
    """

    node: IntArray
    theta: FloatArray
    alpha: FloatArray
    mu: FloatArray
    tau: FloatArray
    n_directions: int
    failed: NDArray[np.bool_]


class RayTransform:
    """``T_lambda`` on the field grid of a disc chart, sampled on an influx.

    Args:
        field_grid: Grid carrying the unknowns.
        influx: Influx quadrature (the data samples).
        step: RK4 step for the ray traces.
        cutoff: Samples with ``mu`` below the cutoff carry no data.

    Example:
        >>> from geotomo.geometry import ConformalDisc
        >>> from geotomo.sphere_bundle import build_influx
        >>> disc = ConformalDisc()
        >>> rt = RayTransform(FieldGrid.for_chart(disc, 41), build_influx(disc, 32, 16))
        >>> chords = rt.forward(lambda x: np.ones(len(x)), 0.0)
        >>> bool(np.allclose(chords, rt.exit_times, atol=1e-8))
        True
    """

    def __init__(
        self,
        field_grid: FieldGrid,
        influx: Influx,
        step: float = DEFAULT_GEODESIC_STEP,
        cutoff: float = TANGENCY_CUTOFF,
    ) -> None:
        self.field_grid = field_grid
        self.chart = field_grid.chart
        self.influx = influx
        self.step = step
        self.cutoff = cutoff
        log_stage(
            logger,
            "ray_transform",
            n_rays=len(influx),
            n_unknowns=field_grid.n_unknowns,
            step=step,
        )
        self.batch, self.nodes = influx_rays(self.chart, influx, step)
        full = interpolation_matrix(field_grid.grid, self.nodes.points)
        self._interp = full[:, np.flatnonzero(field_grid.mask)].tocsr()
        self._data_mask = influx.data_mask(cutoff)
        self._matrices: dict[float, sp.csr_matrix] = {}
        self._footprints: Footprints | None = None

    # -- forward ------------------------------------------------------------

    @property
    def exit_times(self) -> FloatArray:
        return self.batch.exit_time

    @property
    def data_mask(self) -> Any:
        return self._data_mask

    def matrix(self, lam: float) -> sp.csr_matrix:
        """Sparse ``T_lambda`` from unknowns to influx samples (cached)."""
        key = float(lam)
        if key not in self._matrices:
            attenuation = np.exp(-key * self.nodes.times)
            weighted = self.nodes.weighted(attenuation)
            self._matrices[key] = (weighted @ self._interp).tocsr()
        return self._matrices[key]

    def forward(self, f: Any, lam: float) -> Any:
        """``T_lambda f`` on every influx sample.

        ``f`` is either a callable evaluated exactly on the ray nodes or a
        vector of values at the unknowns.

        Raises:
            DomainError: Propagated from interpolation.
        """
        if callable(f):
            return self.nodes.integrate(
                lambda t, x, _xi: np.exp(-lam * t) * np.asarray(f(x))
            )
        return self.matrix(lam) @ np.asarray(f)

    def data(self, f: Any, lam: float) -> Any:
        """``T_lambda f`` with samples below the tangency cutoff zeroed."""
        return np.where(self._data_mask, self.forward(f, lam), 0.0)

    # -- adjoint ------------------------------------------------------------

    def footprints(self, n_directions: int = DEFAULT_N_DIRECTIONS) -> Footprints:
        """Trace every unknown node backward in ``n_directions`` directions."""
        cached = self._footprints
        if cached is not None and cached.n_directions == n_directions:
            return cached
        self._footprints = _trace_footprints(
            self.field_grid, self.step, n_directions
        )
        return self._footprints

    def adjoint_matrix(
        self, lam: float, n_directions: int = DEFAULT_N_DIRECTIONS
    ) -> sp.csr_matrix:
        """Traced ``T*_lambda`` from influx samples to unknowns.

        Each direction contributes ``(2 pi / n) exp(-lambda tau(x, -xi))``
        times the cubic interpolation weights of its footprint on the
        ``(theta_b, alpha)`` influx grid.
        """
        fp = self.footprints(n_directions)
        influx = self.influx
        idx_t, w_t = periodic_lagrange(influx.n_boundary, 2.0 * math.pi, fp.theta)
        idx_a, w_a = nonuniform_lagrange(influx.alpha_nodes, fp.alpha)
        cols = idx_t[:, :, None] * influx.n_angles + idx_a[:, None, :]
        scale = (2.0 * math.pi / fp.n_directions) * np.exp(-lam * fp.tau)
        scale = np.where(fp.failed, 0.0, scale)
        vals = scale[:, None, None] * w_t[:, :, None] * w_a[:, None, :]
        rows = np.broadcast_to(fp.node[:, None, None], cols.shape)
        return sp.coo_matrix(
            (vals.ravel(), (rows.ravel(), cols.ravel())),
            shape=(self.field_grid.n_unknowns, len(influx)),
        ).tocsr()

    def adjoint(
        self, h: Any, lam: float, n_directions: int = DEFAULT_N_DIRECTIONS
    ) -> Any:
        """``T*_lambda h`` at the unknowns by backward footprints."""
        return self.adjoint_matrix(lam, n_directions) @ np.asarray(h)

    def transpose_adjoint(self, h: Any, lam: float) -> Any:
        """``D^{-1} T^T W h``: the adjoint of the assembled matrix."""
        weights = self.influx.weight * self.influx.mu
        return (self.matrix(lam).T @ (weights * np.asarray(h))) / self.field_grid.volume

    # -- normal operator ----------------------------------------------------

    def normal(
        self,
        lam: float,
        route: NormalRoute = NormalRoute.TRANSPOSE,
        n_directions: int = DEFAULT_N_DIRECTIONS,
    ) -> NormalOperator:
        return NormalOperator(self, lam, route, n_directions)


class NormalOperator:
    """``N = T*_lambda T_lambda`` restricted to data above the tangency cutoff.

    The TRANSPOSE route is exactly self-adjoint and positive semidefinite in
    the grid inner product; the TRACED route composes the footprint adjoint
    with the forward matrix.
    """

    def __init__(
        self,
        transform: RayTransform,
        lam: float,
        route: NormalRoute = NormalRoute.TRANSPOSE,
        n_directions: int = DEFAULT_N_DIRECTIONS,
    ) -> None:
        self.transform = transform
        self.lam = float(lam)
        self.route = route
        forward = transform.matrix(lam)
        keep = transform.data_mask.astype(float)
        if route is NormalRoute.TRANSPOSE:
            weights = transform.influx.weight * transform.influx.mu * keep
            gram = forward.T @ sp.diags(weights) @ forward
            self._matrix = (sp.diags(1.0 / transform.field_grid.volume) @ gram).tocsr()
        else:
            back = transform.adjoint_matrix(lam, n_directions)
            self._matrix = (back @ sp.diags(keep) @ forward).tocsr()

    @property
    def matrix(self) -> sp.csr_matrix:
        return self._matrix

    def __call__(self, f: Any) -> Any:
        return self._matrix @ np.asarray(f)

    def inner(self, a: Any, b: Any) -> float:
        return float(np.real(self.transform.field_grid.inner(a, b)))


# =============================================================================
# PUBLIC API
# =============================================================================


def check_attenuation(lam: float, lambda_max: float = LAMBDA_MAX) -> None:
    """Reject attenuations outside the injectivity regime.

    Raises:
        PreconditionError: If ``|lam| > lambda_max``.
    """
    if abs(lam) > lambda_max:
        msg = f"|lambda| = {abs(lam):.4g} exceeds lambda_max = {lambda_max:.4g}"
        raise PreconditionError(msg)


def normal_apply(
    transform: RayTransform,
    f: Any,
    lam: float,
    route: NormalRoute = NormalRoute.TRANSPOSE,
) -> Any:
    """``T*_lambda T_lambda f`` at the unknowns."""
    return transform.normal(lam, route)(f)


def invert_normal(
    operator: NormalOperator,
    data: Any,
    tol: float = CG_TOLERANCE,
    max_iter: int = CG_MAX_ITER,
    *,
    lambda_max: float = LAMBDA_MAX,
    accept_residual: float | None = None,
) -> CGResult:
    """Solve ``N f = data`` by conjugate gradients in the grid inner product.

    ``accept_residual`` lets a solve that stalls below it return its best
    iterate; the discrete normal operator has a near-null space that can
    flatten the residual short of ``tol``.

    Raises:
        PreconditionError: If the attenuation is outside the regime.
        NonconvergenceError: On a residual plateau or budget exhaustion.
    """
    check_attenuation(operator.lam, lambda_max)
    log_stage(logger, "invert_normal", lam=operator.lam, route=str(operator.route))
    return conjugate_gradient(
        operator,
        np.asarray(data, dtype=float),
        tol=tol,
        max_iter=max_iter,
        inner=operator.inner,
        accept_residual=accept_residual,
    )


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _trace_footprints(
    field_grid: FieldGrid, step: float, n_directions: int
) -> Footprints:
    chart = field_grid.chart
    points = field_grid.points
    n_nodes = points.shape[0]
    phi = 2.0 * math.pi * np.arange(n_directions) / n_directions
    unit = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    frame = orthonormal_frame(chart, points)
    xi = np.einsum("pij,dj->pdi", frame, unit).reshape(-1, 2)
    x = np.repeat(points, n_directions, axis=0)
    log_stage(logger, "footprints", n_nodes=n_nodes, n_directions=n_directions)

    back = trace_batch(chart, x, -xi, step, keep_samples=False)
    exit_p, exit_v = back.exit_point, back.exit_direction
    theta = np.arctan2(exit_p[:, 1], exit_p[:, 0])
    nu = outward_normal(chart, exit_p)
    tangent = chart.boundary_tangent(theta)
    inward = -exit_v
    along = metric_inner(chart, exit_p, inward, tangent)
    mu = -metric_inner(chart, exit_p, inward, nu)
    alpha = np.arctan2(along, mu)
    failed = mu < -_FOOTPRINT_SLACK
    if np.any(failed):
        logger.warning(
            "Footprint lookup failed for %d of %d directions",
            int(failed.sum()),
            mu.size,
        )
    return Footprints(
        node=np.repeat(np.arange(n_nodes), n_directions),
        theta=np.mod(theta, 2.0 * math.pi),
        alpha=alpha,
        mu=mu,
        tau=back.exit_time,
        n_directions=n_directions,
        failed=failed,
    )
