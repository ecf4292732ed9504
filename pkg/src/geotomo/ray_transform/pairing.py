"""Fan-beam transforms and the polar pairing identity.

For a center ``omega`` outside M0 the pairing
``<F, exp(-lambda r) b(theta) |g0|^{-1/2}>`` over M0 equals
``int b(theta) T_lambda F(omega, theta) dtheta``, because ``dV_g`` is
``|g0|^{1/2} dr dtheta`` in polar normal coordinates about ``omega``. Both
sides are evaluated here by independent quadratures.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import math
from collections.abc import Callable
from dataclasses import dataclass as std_dataclass
from typing import Any

# Third-party
import numpy as np
import scipy.special
from pydantic import Field
from pydantic.dataclasses import dataclass

# Project/Local
from .._internal import get_logger, log_stage
from ..constants import DEFAULT_GEODESIC_STEP
from ..geometry.charts import ConformalDisc, orthonormal_frame
from ..geometry.geodesics import ray_nodes, trace_batch
from ..geometry.polar import polar_coords
from ..protocols import FloatArray, ScalarField
from .grid import FieldGrid

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
CylinderField = Callable[[FloatArray, FloatArray], Any]
"""``F(x1, x')`` with ``x1`` of shape ``(m,)`` and ``x'`` of shape ``(m, 2)``."""

_DEFAULT_THETA_NODES = 64
_DEFAULT_X1_NODES = 48


# =============================================================================
# CORE CLASSES
# =============================================================================


@dataclass(frozen=True)
class AngularProfile:
    """Smooth bump ``b(theta) = exp(1 - 1/(1 - s^2))``, ``s = (theta - c)/w``.

    Attributes:
        center: Angle of the peak.
        width: Half-width of the support (at most pi).

    Examples:
        >>> b = AngularProfile(center=0.0, width=0.5)
        >>> float(b(np.array([0.0, 0.5, 1.0]))[0])
        1.0
    """

    center: float = 0.0
    width: float = Field(default=0.5, gt=0.0, le=math.pi)

    def __call__(self, theta: Any) -> FloatArray:
        shifted = np.asarray(theta, dtype=float) - self.center + np.pi
        wrapped = np.mod(shifted, 2 * np.pi)
        s = (wrapped - np.pi) / self.width
        inside = np.abs(s) < 1.0
        safe = np.where(inside, s, 0.0)
        return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe**2)), 0.0)

    def nodes(self, n: int = _DEFAULT_THETA_NODES) -> tuple[FloatArray, FloatArray]:
        """Gauss-Legendre nodes and weights over the support window."""
        x, w = scipy.special.roots_legendre(n)
        return self.center + self.width * x, self.width * w

    def integral(self, n: int = _DEFAULT_THETA_NODES) -> float:
        theta, w = self.nodes(n)
        return float(np.sum(w * self(theta)))


@std_dataclass(frozen=True)
class PairingResult:
    """The two routes of the pairing identity."""

    fan_route: complex
    grid_route: complex
    abs_diff: float
    rel_diff: float


# =============================================================================
# PUBLIC API
# =============================================================================


def fan_beam(
    chart: ConformalDisc,
    f: ScalarField,
    lam: float,
    omega: Any,
    thetas: Any,
    step: float = DEFAULT_GEODESIC_STEP,
) -> Any:
    """``T_lambda f(omega, theta)`` along geodesics issued from ``omega``.

    Rays are traced in the enlarged chart; ``f`` is extended by zero outside
    M0 and attenuation is measured from ``omega``.
    """
    center = np.asarray(omega, dtype=float)
    angles = np.atleast_1d(np.asarray(thetas, dtype=float))
    big = chart.enlarged()
    frame = orthonormal_frame(chart, center)
    unit = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    dirs = unit @ frame.T
    starts = np.broadcast_to(center, dirs.shape)
    batch = trace_batch(big, starts, dirs, step)
    nodes = ray_nodes(big, batch)

    def integrand(t: FloatArray, x: FloatArray, _xi: FloatArray) -> Any:
        values = np.asarray(f(x))
        inside = chart.boundary_sdf(x) <= 0.0
        return np.where(inside, np.exp(-lam * t) * values, 0.0)

    return nodes.integrate(integrand)


def pairing_test(
    field_grid: FieldGrid,
    f: ScalarField,
    omega: Any,
    lam: float,
    profile: AngularProfile,
    *,
    n_theta: int = _DEFAULT_THETA_NODES,
    step: float = DEFAULT_GEODESIC_STEP,
) -> PairingResult:
    """Evaluate the polar pairing by fan-beam and by grid quadrature.

    Raises:
        NonconvergenceError: Propagated from the polar chart.

    Examples:
        >>> fg = FieldGrid.for_chart(ConformalDisc(), 41)
        >>> zero = lambda x: np.zeros(len(x))
        >>> pairing_test(fg, zero, [-1.15, 0.0], 0.0, AngularProfile()).fan_route
        0j
    """
    chart = field_grid.chart
    log_stage(logger, "pairing_test", lam=lam, center=profile.center)
    theta, w = profile.nodes(n_theta)
    fan = fan_beam(chart, f, lam, omega, theta, step)
    fan_value = complex(np.sum(w * profile(theta) * fan))

    values = np.asarray(field_grid.sample(f))
    grid_value = _polar_quadrature(field_grid, values, omega, lam, profile)
    return _result(fan_value, grid_value)


def fourier_x1_pairing_check(
    field_grid: FieldGrid,
    f: CylinderField,
    omega: Any,
    lam: float,
    profile: AngularProfile,
    x1_interval: tuple[float, float] = (0.0, 1.0),
    *,
    n_x1: int = _DEFAULT_X1_NODES,
    n_theta: int = _DEFAULT_THETA_NODES,
    step: float = DEFAULT_GEODESIC_STEP,
) -> PairingResult:
    """Reduce the cylinder pairing to M0 by a Fourier transform in ``x1``.

    The cylinder side is
    ``int F exp(i lambda (x1 + i r)) b |g0|^{-1/2} dx1 dV_g0`` by a tensor
    quadrature; the reduced side is the fan-beam route applied to
    ``F_lambda(x') = int F(x1, x') exp(i lambda x1) dx1``. ``F`` must vanish
    near the ends of ``x1_interval``.
    """
    chart = field_grid.chart
    gx, gw = scipy.special.roots_legendre(n_x1)
    lo, hi = x1_interval
    x1 = 0.5 * (hi - lo) * (gx + 1.0) + lo
    w1 = 0.5 * (hi - lo) * gw
    phase = w1 * np.exp(1j * lam * x1)

    def reduced(points: FloatArray) -> Any:
        total = np.zeros(points.shape[0], dtype=complex)
        for x1_k, c_k in zip(x1, phase, strict=True):
            total += c_k * np.asarray(f(np.full(points.shape[0], x1_k), points))
        return total

    pts = field_grid.points
    slab = np.stack(
        [np.asarray(f(np.full(pts.shape[0], x1_k), pts)) for x1_k in x1], axis=0
    )
    transformed = np.sum(phase[:, None] * slab, axis=0)
    cylinder = _polar_quadrature(field_grid, transformed, omega, lam, profile)

    theta, w = profile.nodes(n_theta)
    fan = fan_beam(chart, reduced, lam, omega, theta, step)
    fan_value = complex(np.sum(w * profile(theta) * fan))
    return _result(fan_value, cylinder)


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _polar_quadrature(
    field_grid: FieldGrid,
    values: Any,
    omega: Any,
    lam: float,
    profile: AngularProfile,
) -> complex:
    """``sum vol * F * exp(-lambda r) b(theta) |g0|^{-1/2}`` over the support."""
    vals = np.asarray(values)
    support = np.flatnonzero(np.abs(vals) > 0.0)
    if support.size == 0:
        return 0j
    coords = polar_coords(field_grid.chart, omega, field_grid.points[support])
    kernel = np.exp(-lam * coords.r) * profile(coords.theta) / np.sqrt(coords.det_g0)
    return complex(np.sum(field_grid.volume[support] * vals[support] * kernel))


def _result(fan_value: complex, grid_value: complex) -> PairingResult:
    diff = abs(fan_value - grid_value)
    scale = max(abs(fan_value), abs(grid_value))
    return PairingResult(
        fan_route=fan_value,
        grid_route=grid_value,
        abs_diff=float(diff),
        rel_diff=float(diff / scale) if scale > 0.0 else 0.0,
    )
