"""Quadrature on the unit sphere bundle of a 2D chart and the Santalo identity.

The influx boundary is parameterized by the boundary angle ``theta_b`` and the
angle ``alpha`` in ``(-pi/2, pi/2)`` between ``xi`` and the inward normal:
``xi = -cos(alpha) nu + sin(alpha) T`` with ``mu = cos(alpha)``. The boundary
angle uses the periodic trapezoid rule, ``alpha`` Gauss-Legendre nodes.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import math
from collections.abc import Iterator
from dataclasses import dataclass
from typing import Any

# Third-party
import numpy as np
import scipy.special
from numpy.typing import NDArray

# Project/Local
from ._internal import get_logger, log_stage
from .constants import (
    DEFAULT_GEODESIC_STEP,
    DEFAULT_N_ANGLES,
    DEFAULT_N_BOUNDARY,
    DEFAULT_N_DIRECTIONS,
    DEFAULT_N_RADIAL,
    TANGENCY_CUTOFF,
)
from .geometry.charts import (
    ConformalDisc,
    metric_norm2,
    orthonormal_frame,
    outward_normal,
)
from .geometry.geodesics import BatchTrace, RayNodes, ray_nodes, trace_batch
from .protocols import FloatArray, PhaseField

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)


# =============================================================================
# CORE CLASSES
# =============================================================================


@dataclass(frozen=True)
class InfluxSample:
    """One node of the influx quadrature.

    Attributes:
        base: Boundary point.
        xi: Inward unit vector.
        mu: ``-<xi, nu>_g`` in ``[0, 1]``.
        weight: Quadrature weight of ``dSigma``, without ``mu``.
    """

    base: FloatArray
    xi: FloatArray
    mu: float
    weight: float


@dataclass(frozen=True)
class Influx:
    """Tensor quadrature of the influx boundary, stored as flat arrays.

    Sample ``k`` sits at boundary index ``k // n_angles`` and angle index
    ``k % n_angles``.
    """

    theta: FloatArray
    alpha: FloatArray
    base: FloatArray
    xi: FloatArray
    mu: FloatArray
    weight: FloatArray
    n_boundary: int
    alpha_nodes: FloatArray

    @property
    def n_angles(self) -> int:
        return int(self.alpha_nodes.size)

    def __len__(self) -> int:
        return int(self.mu.size)

    def __iter__(self) -> Iterator[InfluxSample]:
        for k in range(len(self)):
            yield InfluxSample(
                base=self.base[k],
                xi=self.xi[k],
                mu=float(self.mu[k]),
                weight=float(self.weight[k]),
            )

    def data_mask(self, cutoff: float = TANGENCY_CUTOFF) -> NDArray[np.bool_]:
        """Samples that carry inversion data (``mu >= cutoff``)."""
        return self.mu >= cutoff

    def inner(self, a: Any, b: Any) -> Any:
        """``(a, b)_{L^2_mu}`` of two boundary functions."""
        return np.sum(self.weight * self.mu * np.asarray(a) * np.conj(b))

    def as_rows(self) -> list[dict[str, float]]:
        """CSV rows: base coordinates, angles, ``mu`` and weight."""
        return [
            {
                "x1": float(self.base[k, 0]),
                "x2": float(self.base[k, 1]),
                "theta": float(self.theta[k]),
                "alpha": float(self.alpha[k]),
                "mu": float(self.mu[k]),
                "weight": float(self.weight[k]),
            }
            for k in range(len(self))
        ]


@dataclass(frozen=True)
class BundleQuadrature:
    """Influx quadrature plus a product quadrature of the interior bundle.

    Attributes:
        influx: Influx boundary nodes.
        points: Interior base points.
        volume: Volume weights of the base points.
        n_directions: Uniform directions per base point.
    """

    influx: Influx
    points: FloatArray
    volume: FloatArray
    n_directions: int

    def interior_nodes(
        self, chart: ConformalDisc
    ) -> tuple[FloatArray, FloatArray, FloatArray]:
        """Flat ``(x, xi, weight)`` nodes of ``SM0``."""
        phi = 2.0 * math.pi * np.arange(self.n_directions) / self.n_directions
        unit = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        frame = orthonormal_frame(chart, self.points)
        xi = np.einsum("pij,dj->pdi", frame, unit).reshape(-1, 2)
        x = np.repeat(self.points, self.n_directions, axis=0)
        w = np.repeat(self.volume, self.n_directions) * (
            2.0 * math.pi / self.n_directions
        )
        return x, xi, w

    @property
    def total_measure(self) -> float:
        """Interior bundle volume ``2 pi area(M0)``."""
        return float(2.0 * math.pi * np.sum(self.volume))


@dataclass(frozen=True)
class SantaloResult:
    """Both sides of the Santalo identity."""

    lhs: complex | float
    rhs: complex | float
    abs_err: float
    rel_err: float


# =============================================================================
# PUBLIC API
# =============================================================================


def build_influx(
    chart: ConformalDisc,
    n_boundary: int = DEFAULT_N_BOUNDARY,
    n_angles: int = DEFAULT_N_ANGLES,
) -> Influx:
    """Tensor quadrature over boundary arc length and inward angles.

    Weights are ``|dp/dtheta|_g * (2 pi / n_boundary) * w_alpha`` so that
    ``sum(weight * mu * h)`` approximates ``int h mu dSigma``.

    Examples:
        >>> influx = build_influx(ConformalDisc(), 64, 16)
        >>> round(float(np.sum(influx.weight * influx.mu)) / (4 * np.pi), 8)
        1.0
    """
    if n_boundary < 1 or n_angles < 1:
        msg = f"Influx sizes must be positive, got {n_boundary} x {n_angles}"
        raise ValueError(msg)
    log_stage(logger, "build_influx", n_boundary=n_boundary, n_angles=n_angles)
    theta_b = 2.0 * math.pi * np.arange(n_boundary) / n_boundary
    base = chart.boundary_point(theta_b)
    velocity = chart.boundary_velocity(theta_b)
    speed = np.sqrt(metric_norm2(chart, base, velocity))
    tangent = velocity / speed[:, None]
    nu = outward_normal(chart, base)

    nodes, gauss_w = scipy.special.roots_legendre(n_angles)
    alpha_nodes = 0.5 * math.pi * nodes
    w_alpha = 0.5 * math.pi * gauss_w

    theta = np.repeat(theta_b, n_angles)
    alpha = np.tile(alpha_nodes, n_boundary)
    c, s = np.cos(alpha)[:, None], np.sin(alpha)[:, None]
    xi = -c * np.repeat(nu, n_angles, axis=0) + s * np.repeat(tangent, n_angles, axis=0)
    weight = np.repeat(speed * (2.0 * math.pi / n_boundary), n_angles) * np.tile(
        w_alpha, n_boundary
    )
    return Influx(
        theta=theta,
        alpha=alpha,
        base=np.repeat(base, n_angles, axis=0),
        xi=xi,
        mu=np.cos(alpha),
        weight=weight,
        n_boundary=n_boundary,
        alpha_nodes=alpha_nodes,
    )


def build_bundle_quadrature(
    chart: ConformalDisc,
    n_boundary: int = DEFAULT_N_BOUNDARY,
    n_angles: int = DEFAULT_N_ANGLES,
    n_radial: int = DEFAULT_N_RADIAL,
    n_directions: int = DEFAULT_N_DIRECTIONS,
) -> BundleQuadrature:
    """Influx nodes and a polar-Gauss x uniform-angle quadrature of ``SM0``."""
    points, volume = chart.interior_quadrature(n_radial, 2 * n_radial)
    return BundleQuadrature(
        influx=build_influx(chart, n_boundary, n_angles),
        points=points,
        volume=volume,
        n_directions=n_directions,
    )


def influx_rays(
    chart: ConformalDisc, influx: Influx, step: float = DEFAULT_GEODESIC_STEP
) -> tuple[BatchTrace, RayNodes]:
    """Trace every influx ray and build its quadrature nodes."""
    batch = trace_batch(chart, influx.base, influx.xi, step)
    return batch, ray_nodes(chart, batch)


def santalo_check(
    chart: ConformalDisc,
    field: PhaseField,
    quad: BundleQuadrature,
    step: float = DEFAULT_GEODESIC_STEP,
) -> SantaloResult:
    """Compare ``int_{SM0} F`` with ``int_{influx} int_0^tau F(phi_t) mu dt``.

    Raises:
        TrappedGeodesicError: Propagated from the ray traces.

    Examples:
        >>> quad = build_bundle_quadrature(ConformalDisc(), 32, 16, 16, 32)
        >>> ones = lambda x, xi: np.ones(len(x))
        >>> santalo_check(ConformalDisc(), ones, quad).rel_err < 1e-3
        True
    """
    x, xi, w = quad.interior_nodes(chart)
    lhs = np.sum(w * np.asarray(field(x, xi)))
    _, nodes = influx_rays(chart, quad.influx, step)
    along = nodes.integrate(lambda _t, px, pxi: field(px, pxi))
    rhs = np.sum(quad.influx.weight * quad.influx.mu * along)
    abs_err = float(abs(lhs - rhs))
    scale = max(float(abs(lhs)), float(abs(rhs)), 1e-300)
    logger.debug("Santalo lhs=%.10g rhs=%.10g", np.real(lhs), np.real(rhs))
    return SantaloResult(
        lhs=_scalar(lhs),
        rhs=_scalar(rhs),
        abs_err=abs_err,
        rel_err=abs_err / scale,
    )


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _scalar(value: Any) -> complex | float:
    if np.iscomplexobj(value):
        return complex(value)
    return float(value)
