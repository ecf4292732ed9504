"""Closed-form metric charts.

Two families cover every experiment:

* ``ConformalDisc``: a disc of coordinate radius ``radius`` with metric
  ``(1 + K|x|^2/4)^-2 * delta``. ``K = 0`` is the Euclidean disc, ``K > 0`` a
  spherical cap (stereographic coordinates) and ``K < 0`` a hyperbolic disc.
* ``AdmissibleCylinder``: ``[x1_min, x1_max] x disc`` with the metric
  ``c(x1) * (e + g0)``, ``c = exp(2 kappa x1)``, ``g0`` from a ConformalDisc.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import math
from dataclasses import replace
from typing import ClassVar

# Third-party
import numpy as np
import scipy.special
from pydantic import Field
from pydantic.dataclasses import dataclass

# Project/Local
from .._internal import get_logger
from ..constants import DEFAULT_MARGIN
from ..enums import ChartKind
from ..exceptions import DomainError
from ..protocols import FloatArray, MetricChart

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)


# =============================================================================
# CORE CLASSES
# =============================================================================


@dataclass(frozen=True)
class ConformalDisc:
    """Disc ``|x| <= radius`` with a constant-curvature conformal metric.

    Attributes:
        radius: Coordinate radius of M0.
        curvature: Gaussian curvature ``K``.
        margin: Enlargement width (the enlarged chart is ``|x| <= radius + margin``).

    Examples:
        >>> disc = ConformalDisc(radius=1.0)
        >>> disc.g_eval(np.array([0.3, 0.4]))
        array([[1., 0.],
               [0., 1.]])
        >>> disc.boundary_curvature()
        1.0
    """

    dim: ClassVar[int] = 2

    radius: float = Field(default=1.0, gt=0.0)
    curvature: float = 0.0
    margin: float = Field(default=DEFAULT_MARGIN, ge=0.0)

    def __post_init__(self) -> None:
        if self.curvature < 0.0:
            horizon = 2.0 / math.sqrt(-self.curvature)
            if self.radius + self.margin >= horizon:
                msg = (
                    f"Hyperbolic chart radius {self.radius + self.margin} must stay "
                    f"inside the model horizon {horizon:.6g}"
                )
                raise ValueError(msg)

    @classmethod
    def from_kind(
        cls,
        kind: ChartKind,
        radius: float = 1.0,
        curvature: float = 1.0,
        margin: float = DEFAULT_MARGIN,
    ) -> ConformalDisc:
        """Build a chart from its kind; ``curvature`` is a magnitude."""
        k = abs(curvature)
        signed = {
            ChartKind.EUCLIDEAN_DISC: 0.0,
            ChartKind.SPHERICAL_CAP: k,
            ChartKind.HYPERBOLIC_DISC: -k,
        }[kind]
        return cls(radius=radius, curvature=signed, margin=margin)

    @property
    def kind(self) -> ChartKind:
        if self.curvature > 0.0:
            return ChartKind.SPHERICAL_CAP
        if self.curvature < 0.0:
            return ChartKind.HYPERBOLIC_DISC
        return ChartKind.EUCLIDEAN_DISC

    @property
    def scale(self) -> float:
        return self.radius

    # -- metric -------------------------------------------------------------

    def conformal_factor(self, x: FloatArray) -> FloatArray:
        """``sigma(x) = (1 + K|x|^2/4)^-2``."""
        r2 = np.sum(np.asarray(x, dtype=float) ** 2, axis=-1)
        base = 1.0 + 0.25 * self.curvature * r2
        if np.any(base <= 0.0):
            msg = "Point beyond the hyperbolic model horizon"
            raise DomainError(msg)
        return base**-2

    def metric_diagonal(self, x: FloatArray) -> FloatArray:
        sigma = self.conformal_factor(x)
        return np.stack([sigma, sigma], axis=-1)

    def g_eval(self, x: FloatArray) -> FloatArray:
        sigma = self.conformal_factor(x)
        return sigma[..., None, None] * np.eye(2)

    def christoffel_exact(self, x: FloatArray) -> FloatArray:
        """Closed-form symbols ``Gamma[..., k, i, j]`` of the conformal metric.

        With ``g = e^{2s} delta``:
        ``Gamma^k_ij = delta_ik s_j + delta_jk s_i - delta_ij s_k``.
        """
        x = np.asarray(x, dtype=float)
        base = 1.0 + 0.25 * self.curvature * np.sum(x**2, axis=-1)
        ds = -(0.5 * self.curvature * x) / base[..., None]
        eye = np.eye(2)
        return (
            np.einsum("ki,...j->...kij", eye, ds)
            + np.einsum("kj,...i->...kij", eye, ds)
            - np.einsum("ij,...k->...kij", eye, ds)
        )

    # -- boundary -----------------------------------------------------------

    def boundary_sdf(self, x: FloatArray) -> FloatArray:
        return np.linalg.norm(np.asarray(x, dtype=float), axis=-1) - self.radius

    def sdf_gradient(self, x: FloatArray) -> FloatArray:
        x = np.asarray(x, dtype=float)
        norm = np.linalg.norm(x, axis=-1, keepdims=True)
        return x / np.where(norm > 0.0, norm, 1.0)

    def boundary_point(self, theta: FloatArray) -> FloatArray:
        theta = np.asarray(theta, dtype=float)
        return self.radius * np.stack([np.cos(theta), np.sin(theta)], axis=-1)

    def boundary_velocity(self, theta: FloatArray) -> FloatArray:
        theta = np.asarray(theta, dtype=float)
        return self.radius * np.stack([-np.sin(theta), np.cos(theta)], axis=-1)

    def boundary_tangent(self, theta: FloatArray) -> FloatArray:
        """Counterclockwise g-unit tangent at ``boundary_point(theta)``."""
        vel = self.boundary_velocity(theta)
        speed = np.sqrt(metric_norm2(self, self.boundary_point(theta), vel))
        return vel / speed[..., None]

    def outward_normal(self, x: FloatArray) -> FloatArray:
        return outward_normal(self, x)

    def boundary_curvature(self) -> float:
        """Geodesic curvature of the boundary circle, ``(1 - K rho^2/4)/rho``."""
        return (1.0 - 0.25 * self.curvature * self.radius**2) / self.radius

    def boundary_length(self) -> float:
        sigma = float(self.conformal_factor(np.array([self.radius, 0.0])))
        return 2.0 * math.pi * self.radius * math.sqrt(sigma)

    # -- enlargement and volume ----------------------------------------------

    def enlarged(self, extra: float | None = None) -> ConformalDisc:
        """The enlarged chart ``|x| <= radius + margin`` as a chart of its own."""
        grow = self.margin if extra is None else extra
        return replace(self, radius=self.radius + grow, margin=0.0)

    def contains(self, x: FloatArray, margin: float = 0.0) -> FloatArray:
        return self.boundary_sdf(x) <= margin

    def interior_quadrature(
        self, n_radial: int, n_angular: int
    ) -> tuple[FloatArray, FloatArray]:
        """Polar Gauss x trapezoid quadrature of ``dV_g`` over M0.

        Returns:
            Points ``(n_radial * n_angular, 2)`` and volume weights.
        """
        nodes, weights = scipy.special.roots_legendre(n_radial)
        r = 0.5 * self.radius * (nodes + 1.0)
        wr = 0.5 * self.radius * weights
        phi = 2.0 * math.pi * np.arange(n_angular) / n_angular
        rr, pp = np.meshgrid(r, phi, indexing="ij")
        points = np.stack([rr * np.cos(pp), rr * np.sin(pp)], axis=-1).reshape(-1, 2)
        sigma = self.conformal_factor(points)
        w = (wr[:, None] * rr * (2.0 * math.pi / n_angular)).reshape(-1) * sigma
        return points, w

    def area(self) -> float:
        """Riemannian area of M0 in closed form."""
        k, rho = self.curvature, self.radius
        if k == 0.0:
            return math.pi * rho**2
        # integral of 2 pi r (1 + k r^2 / 4)^-2 dr
        return math.pi * rho**2 / (1.0 + 0.25 * k * rho**2)


@dataclass(frozen=True)
class AdmissibleCylinder:
    """``[x1_min, x1_max] x base`` with metric ``exp(2 kappa x1) (e + g0)``.

    Attributes:
        base: Transversal chart (M0).
        x1_min: Lower end of the x1 interval.
        x1_max: Upper end of the x1 interval.
        kappa: Conformal exponent (``c = exp(2 kappa x1)``).
    """

    dim: ClassVar[int] = 3

    base: ConformalDisc = Field(default_factory=ConformalDisc)
    x1_min: float = 0.0
    x1_max: float = 1.0
    kappa: float = 0.0

    def __post_init__(self) -> None:
        if self.x1_max <= self.x1_min:
            msg = f"Cylinder needs x1_max > x1_min, got [{self.x1_min}, {self.x1_max}]"
            raise ValueError(msg)

    @property
    def margin(self) -> float:
        return self.base.margin

    @property
    def scale(self) -> float:
        return max(self.base.radius, self.x1_max - self.x1_min)

    def conformal_factor(self, x: FloatArray) -> FloatArray:
        return np.exp(2.0 * self.kappa * np.asarray(x, dtype=float)[..., 0])

    def metric_diagonal(self, x: FloatArray) -> FloatArray:
        x = np.asarray(x, dtype=float)
        c = self.conformal_factor(x)
        sigma = self.base.conformal_factor(x[..., 1:])
        return np.stack([c, c * sigma, c * sigma], axis=-1)

    def g_eval(self, x: FloatArray) -> FloatArray:
        diag = self.metric_diagonal(x)
        return diag[..., :, None] * np.eye(3)

    def christoffel_exact(self, x: FloatArray) -> FloatArray:
        """Closed-form symbols for ``kappa`` with a Euclidean base.

        The metric is ``exp(2 s) delta`` with ``s = kappa x1``; the general
        conformal formula applies.
        """
        if self.base.curvature != 0.0:
            msg = "Closed-form cylinder symbols need a Euclidean base"
            raise DomainError(msg)
        x = np.asarray(x, dtype=float)
        ds = np.zeros(x.shape)
        ds[..., 0] = self.kappa
        eye = np.eye(3)
        return (
            np.einsum("ki,...j->...kij", eye, ds)
            + np.einsum("kj,...i->...kij", eye, ds)
            - np.einsum("ij,...k->...kij", eye, ds)
        )

    def boundary_sdf(self, x: FloatArray) -> FloatArray:
        x = np.asarray(x, dtype=float)
        mid = 0.5 * (self.x1_min + self.x1_max)
        half = 0.5 * (self.x1_max - self.x1_min)
        axial = np.abs(x[..., 0] - mid) - half
        return np.maximum(axial, self.base.boundary_sdf(x[..., 1:]))

    def sdf_gradient(self, x: FloatArray) -> FloatArray:
        x = np.asarray(x, dtype=float)
        mid = 0.5 * (self.x1_min + self.x1_max)
        half = 0.5 * (self.x1_max - self.x1_min)
        axial = np.abs(x[..., 0] - mid) - half
        radial = self.base.boundary_sdf(x[..., 1:])
        grad = np.zeros(x.shape)
        use_axial = axial >= radial
        grad[..., 0] = np.where(use_axial, np.sign(x[..., 0] - mid), 0.0)
        radial_grad = self.base.sdf_gradient(x[..., 1:])
        grad[..., 1:] = np.where(use_axial[..., None], 0.0, radial_grad)
        return grad


# =============================================================================
# PUBLIC API
# =============================================================================


def metric_norm2(chart: MetricChart, x: FloatArray, v: FloatArray) -> FloatArray:
    """``|v|_g^2`` at ``x``."""
    g = chart.g_eval(x)
    return np.einsum("...i,...ij,...j->...", v, g, v)


def metric_inner(
    chart: MetricChart, x: FloatArray, u: FloatArray, v: FloatArray
) -> FloatArray:
    """``<u, v>_g`` at ``x``."""
    g = chart.g_eval(x)
    return np.einsum("...i,...ij,...j->...", u, g, v)


def outward_normal(chart: MetricChart, x: FloatArray) -> FloatArray:
    """Outward g-unit normal ``g^{-1} d(sdf) / |d(sdf)|_g`` (contravariant)."""
    g = chart.g_eval(x)
    ginv = np.linalg.inv(g)
    grad = chart.sdf_gradient(x)
    raised = np.einsum("...ij,...j->...i", ginv, grad)
    norm = np.sqrt(np.einsum("...i,...i->...", raised, grad))
    return raised / norm[..., None]


def orthonormal_frame(chart: MetricChart, x: FloatArray) -> FloatArray:
    """Gram-Schmidt frame of the coordinate basis under ``g``.

    Returns:
        Array ``(..., dim, dim)`` whose columns are g-orthonormal.
    """
    g = chart.g_eval(x)
    dim = g.shape[-1]
    columns: list[FloatArray] = []
    for i in range(dim):
        v = np.zeros(g.shape[:-1])
        v[..., i] = 1.0
        for e in columns:
            v = v - np.einsum("...i,...ij,...j->...", v, g, e)[..., None] * e
        norm = np.sqrt(np.einsum("...i,...ij,...j->...", v, g, v))
        columns.append(v / norm[..., None])
    return np.stack(columns, axis=-1)


def normalize(chart: MetricChart, x: FloatArray, v: FloatArray) -> FloatArray:
    """Rescale ``v`` to unit g-length."""
    return v / np.sqrt(metric_norm2(chart, x, v))[..., None]
