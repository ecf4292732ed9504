"""Log-polar coordinates around a point outside the convex hull of a domain.

After translating ``x0`` to the origin and rotating the domain into
``{x_n > 0}``, the map ``x -> (log|x|, z)``, with ``z`` the scaled
stereographic coordinate ``2 w' / (1 + w_n)`` of ``w = x / |x|``, carries the
Euclidean metric to ``e^(2 y1) (e + g_S)``. In ``z`` the round metric is the
``ConformalDisc`` metric of curvature one, so the image is an admissible
cylinder with ``kappa = 1``.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from dataclasses import dataclass as std_dataclass
from typing import Any

# Third-party
import numpy as np
import scipy.optimize
from numpy.typing import NDArray
from pydantic.dataclasses import dataclass

# Project/Local
from .._internal import get_logger, log_stage
from ..constants import DEFAULT_EPSILON, DEFAULT_SEED
from ..exceptions import PreconditionError
from ..geometry import AdmissibleCylinder, ConformalDisc

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
FloatArray = NDArray[np.float64]

# Minimal LP separation margin for x0 to count as outside the hull
SEPARATION_TOLERANCE = 1e-9
CAP_PADDING = 1.05
N_METRIC_CHECKS = 50


# =============================================================================
# CORE CLASSES
# =============================================================================
@std_dataclass(frozen=True)
class PointDomain:
    """A Euclidean domain given by boundary samples and outward unit normals.

    Attributes:
        points: Boundary points, shape ``(m, n)``.
        normals: Outward unit normals at the points.
    """

    points: FloatArray
    normals: FloatArray

    @classmethod
    def ball(
        cls, center: tuple[float, ...], radius: float, n_points: int = 400
    ) -> PointDomain:
        """Fibonacci samples of a sphere (or equispaced samples of a circle)."""
        dim = len(center)
        if dim == 2:
            angle = 2.0 * np.pi * np.arange(n_points) / n_points
            normals = np.stack([np.cos(angle), np.sin(angle)], axis=-1)
        elif dim == 3:
            k = np.arange(n_points) + 0.5
            polar = np.arccos(1.0 - 2.0 * k / n_points)
            azimuth = np.pi * (1.0 + np.sqrt(5.0)) * k
            normals = np.stack(
                [
                    np.sin(polar) * np.cos(azimuth),
                    np.sin(polar) * np.sin(azimuth),
                    np.cos(polar),
                ],
                axis=-1,
            )
        else:
            msg = f"Ball domains are 2D or 3D, got dimension {dim}"
            raise ValueError(msg)
        points = np.asarray(center, dtype=float) + radius * normals
        return cls(points=points, normals=normals)

    @property
    def dim(self) -> int:
        return int(self.points.shape[-1])


@std_dataclass(frozen=True)
class LogPolarMap:
    """``x -> (log|R(x - x0)|, z)`` with ``R`` a rotation into ``{x_n > 0}``.

    Attributes:
        x0: The pole.
        rotation: Orthogonal matrix whose last row is the separating direction.
        separation: LP margin ``min_i <w, x_i - x0>`` with ``|w|_inf <= 1``.
    """

    x0: FloatArray
    rotation: FloatArray
    separation: float

    @property
    def dim(self) -> int:
        return int(self.x0.size)

    def to_chart(self, x: FloatArray) -> FloatArray:
        v = (np.asarray(x, dtype=float) - self.x0) @ self.rotation.T
        r = np.linalg.norm(v, axis=-1)
        w = v / r[..., None]
        z = 2.0 * w[..., :-1] / (1.0 + w[..., -1:])
        return np.concatenate([np.log(r)[..., None], z], axis=-1)

    def from_chart(self, y: FloatArray) -> FloatArray:
        y = np.asarray(y, dtype=float)
        w = _sphere_point(y[..., 1:])
        return self.x0 + (np.exp(y[..., :1]) * w) @ self.rotation

    def jacobian(self, y: FloatArray) -> FloatArray:
        """``dx/dy`` with shape ``(..., n, n)`` (columns indexed by ``y``)."""
        y = np.asarray(y, dtype=float)
        z = y[..., 1:]
        r = np.exp(y[..., 0])
        d = 1.0 + 0.25 * np.sum(z**2, axis=-1)
        m = self.dim - 1
        dw = np.zeros((*z.shape[:-1], self.dim, m))
        eye = np.eye(m)
        dw[..., :-1, :] = eye / d[..., None, None] - 0.5 * (
            z[..., :, None] * z[..., None, :]
        ) / (d**2)[..., None, None]
        dw[..., -1, :] = -z / (d**2)[..., None]
        columns = np.concatenate([_sphere_point(z)[..., :, None], dw], axis=-1)
        local = r[..., None, None] * columns
        return np.einsum("ji,...jk->...ik", self.rotation, local)

    def chart_metric(self, y: FloatArray) -> FloatArray:
        """Diagonal of ``e^(2 y1) (e + g_S)`` in ``(y1, z)``."""
        y = np.asarray(y, dtype=float)
        c = np.exp(2.0 * y[..., 0])
        sigma = ConformalDisc(radius=2.0, curvature=1.0).conformal_factor(y[..., 1:])
        comps = [c] + [c * sigma] * (self.dim - 1)
        return np.stack(comps, axis=-1)

    def dphi_euclidean(self, x: FloatArray, normals: FloatArray) -> FloatArray:
        """``d_nu log|x - x0|`` with Euclidean unit normals."""
        v = np.asarray(x, dtype=float) - self.x0
        return np.sum(normals * v, axis=-1) / np.sum(v**2, axis=-1)

    def dphi_chart(self, x: FloatArray, normals: FloatArray) -> FloatArray:
        """``d_nu y1`` with the normals pushed into the chart."""
        y = self.to_chart(x)
        pushed = np.linalg.solve(self.jacobian(y), np.asarray(normals)[..., None])
        return pushed[..., 0, 0]

    def cylinder(self, domain: PointDomain) -> AdmissibleCylinder:
        """``[min y1, max y1] x cap`` with metric ``e^(2 y1) (e + g_S)``."""
        if self.dim != 3:
            msg = f"Admissible cylinders are 3D, the domain is {self.dim}D"
            raise ValueError(msg)
        y = self.to_chart(domain.points)
        radius = CAP_PADDING * float(np.linalg.norm(y[:, 1:], axis=-1).max())
        base = ConformalDisc(radius=radius, curvature=1.0)
        return AdmissibleCylinder(
            base=base,
            x1_min=float(y[:, 0].min()),
            x1_max=float(y[:, 0].max()),
            kappa=1.0,
        )


@dataclass(frozen=True)
class LogPolarReport:
    """Checks of the log-polar change of coordinates.

    Attributes:
        metric_error: Max relative defect of ``J^T J = e^(2 y1) (e + g_S)``.
        phi_error: Max ``|log|x - x0| - y1|``.
        mask_equal: Whether the ε-masks agree node for node.
        n_minus: Boundary samples in ``d_nu phi < epsilon``.
        n_plus: Boundary samples in ``d_nu phi >= epsilon``.
        cap_radius: Largest ``|z|`` over the domain samples.
    """

    metric_error: float
    phi_error: float
    mask_equal: bool
    n_minus: int
    n_plus: int
    cap_radius: float


# =============================================================================
# PUBLIC API
# =============================================================================


def logpolar_map(
    domain: PointDomain,
    x0: tuple[float, ...],
    epsilon: float = DEFAULT_EPSILON,
    n_checks: int = N_METRIC_CHECKS,
    seed: int = DEFAULT_SEED,
) -> tuple[LogPolarMap, LogPolarReport]:
    """Build the log-polar chart around ``x0`` and verify it.

    A linear program finds a direction ``w`` maximizing
    ``min_i <w, x_i - x0>``; a positive optimum separates ``x0`` from the
    convex hull and fixes the rotation.

    Args:
        domain: Boundary samples and outward normals.
        x0: Pole, outside the closed convex hull of the domain.
        epsilon: Mask threshold on ``d_nu phi``.
        n_checks: Random hull points at which the metric is compared.
        seed: Seed for the check points.

    Returns:
        The map and its report.

    Raises:
        PreconditionError: If ``x0`` lies in the closed convex hull.

    Examples:
        >>> domain = PointDomain.ball((0.0, 0.0, 3.0), 1.0)
        >>> chart, report = logpolar_map(domain, (0.0, 0.0, 0.0))
        >>> report.mask_equal, report.metric_error < 1e-8
        (True, True)
    """
    pole = np.asarray(x0, dtype=float)
    if pole.size != domain.dim:
        msg = f"Pole has {pole.size} coordinates for a {domain.dim}D domain"
        raise ValueError(msg)
    direction, margin = _separate(domain.points - pole)
    rotation = _rotation_to_last(direction)
    chart = LogPolarMap(x0=pole, rotation=rotation, separation=margin)

    y = chart.to_chart(domain.points)
    radius = np.linalg.norm(domain.points - pole, axis=-1)
    phi_error = float(np.abs(np.log(radius) - y[:, 0]).max())

    rng = np.random.default_rng(seed)
    i, j = rng.integers(0, domain.points.shape[0], (2, n_checks))
    s = rng.uniform(0.0, 1.0, (n_checks, 1))
    inside = s * domain.points[i] + (1.0 - s) * domain.points[j]
    y_check = chart.to_chart(inside)
    jac = chart.jacobian(y_check)
    pulled = np.einsum("...ji,...jk->...ik", jac, jac)
    expected = chart.chart_metric(y_check)[..., None] * np.eye(domain.dim)
    scale = np.abs(expected).max(axis=(-2, -1))
    metric_error = float((np.abs(pulled - expected).max(axis=(-2, -1)) / scale).max())

    minus_x = chart.dphi_euclidean(domain.points, domain.normals) < epsilon
    minus_y = chart.dphi_chart(domain.points, domain.normals) < epsilon
    report = LogPolarReport(
        metric_error=metric_error,
        phi_error=phi_error,
        mask_equal=bool(np.array_equal(minus_x, minus_y)),
        n_minus=int(minus_x.sum()),
        n_plus=int((~minus_x).sum()),
        cap_radius=float(np.linalg.norm(y[:, 1:], axis=-1).max()),
    )
    log_stage(
        logger,
        "logpolar_map",
        separation=margin,
        metric_error=metric_error,
        mask_equal=report.mask_equal,
    )
    return chart, report


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _separate(offsets: FloatArray) -> tuple[FloatArray, float]:
    """Maximize ``t`` subject to ``<w, p_i> >= t`` and ``|w|_inf <= 1``."""
    m, n = offsets.shape
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    a_ub = np.hstack([-offsets, np.ones((m, 1))])
    bounds = [(-1.0, 1.0)] * n + [(None, 1.0)]
    result = scipy.optimize.linprog(
        cost, A_ub=a_ub, b_ub=np.zeros(m), bounds=bounds, method="highs"
    )
    if not result.success:
        msg = f"Separation LP failed: {result.message}"
        raise PreconditionError(msg)
    margin = float(-result.fun)
    if margin <= SEPARATION_TOLERANCE:
        msg = (
            f"Pole lies in the closed convex hull of the domain "
            f"(separation margin {margin:.3e})"
        )
        raise PreconditionError(msg)
    w = np.asarray(result.x[:n], dtype=float)
    return w / np.linalg.norm(w), margin


def _rotation_to_last(direction: FloatArray) -> FloatArray:
    """Householder reflection whose last row is ``direction``."""
    n = direction.size
    e_n = np.zeros(n)
    e_n[-1] = 1.0
    v = direction - e_n
    norm2 = float(v @ v)
    if norm2 < 1e-30:
        return np.eye(n)
    return np.eye(n) - 2.0 * np.outer(v, v) / norm2


def _sphere_point(z: Any) -> FloatArray:
    """Inverse of ``w -> 2 w' / (1 + w_n)`` on the upper hemisphere."""
    z = np.asarray(z, dtype=float)
    d = 1.0 + 0.25 * np.sum(z**2, axis=-1)
    head = z / d[..., None]
    tail = (1.0 - 0.25 * np.sum(z**2, axis=-1)) / d
    return np.concatenate([head, tail[..., None]], axis=-1)
