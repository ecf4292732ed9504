"""Exponential map and polar normal coordinates on 2D charts."""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from dataclasses import dataclass
from typing import Any

# Third-party
import numpy as np

# Project/Local
from .._internal import get_logger
from ..constants import (
    EXP_MAP_STEPS,
    NEWTON_MAX_HALVINGS,
    NEWTON_MAX_ITER,
    NEWTON_TOLERANCE,
    POLAR_FD_STEP,
    POLAR_JACOBIAN_STEP,
)
from ..exceptions import GeodesicRangeError, NonconvergenceError
from ..protocols import FloatArray, MetricChart
from .charts import metric_inner, metric_norm2, normalize, orthonormal_frame
from .geodesics import rk4_step

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
_STAGNATION_STEP = 1e-13
_STAGNATION_RESIDUAL = 1e-8


# =============================================================================
# CORE CLASSES
# =============================================================================


@dataclass(frozen=True)
class PolarCoordinates:
    """Polar normal coordinates of a set of points about a center.

    Attributes:
        r: Geodesic distance from the center.
        theta: Angle against the g-orthonormal frame at the center.
        det_g0: Metric determinant ``|g0|`` in ``(r, theta)`` coordinates.
        residual: Final shooting residual per point.
        iterations: Newton iterations used.
    """

    r: FloatArray
    theta: FloatArray
    det_g0: FloatArray
    residual: FloatArray
    iterations: int


# =============================================================================
# PUBLIC API
# =============================================================================


def exp_map(chart: MetricChart, omega: Any, r: Any, theta: Any) -> FloatArray:
    """Point at arc length ``r`` along the geodesic from ``omega``.

    The direction is ``cos(theta) e1 + sin(theta) e2`` in the g-orthonormal
    frame at ``omega``. ``r`` and ``theta`` broadcast together.

    Raises:
        ValueError: If some ``r`` is negative.
        GeodesicRangeError: If a path leaves the enlarged chart before ``r``.

    Examples:
        >>> from geotomo.geometry.charts import ConformalDisc
        >>> np.round(exp_map(ConformalDisc(), [-1.2, 0.0], 0.5, 0.0), 12)
        array([-0.7,  0. ])
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0.0):
        msg = "Geodesic length must be nonnegative"
        raise ValueError(msg)
    points, ok = _shoot(chart, np.asarray(omega, dtype=float), r_arr, theta)
    if not np.all(ok):
        msg = (
            f"{int(np.sum(~ok))} geodesics leave the enlarged chart "
            f"(margin {chart.margin}) before the requested length"
        )
        raise GeodesicRangeError(msg)
    return points


def polar_coords(chart: MetricChart, omega: Any, x: Any) -> PolarCoordinates:
    """Invert the exponential map at ``omega`` by damped Newton shooting.

    Args:
        chart: A 2D chart.
        omega: Center in the enlarged chart, outside M0.
        x: Target points ``(..., 2)`` in M0.

    Returns:
        Coordinates with ``exp_map(omega, r, theta) == x`` and ``|g0|``.

    Raises:
        NonconvergenceError: If some point has not converged after the
            iteration budget.
    """
    center = np.asarray(omega, dtype=float)
    target = np.asarray(x, dtype=float)
    shape = target.shape[:-1]
    pts = target.reshape(-1, 2)

    frame = orthonormal_frame(chart, center)
    local = np.linalg.solve(frame, (pts - center).T).T
    r = np.linalg.norm(local, axis=-1)
    theta = np.arctan2(local[:, 1], local[:, 0])
    residual = _residual(chart, center, r, theta, pts)
    dr = POLAR_FD_STEP * chart.scale
    dth = POLAR_FD_STEP

    iterations = 0
    while iterations < NEWTON_MAX_ITER:
        todo = np.flatnonzero(residual > NEWTON_TOLERANCE)
        if todo.size == 0:
            break
        iterations += 1
        rr, tt, goal = r[todo], theta[todo], pts[todo]
        p0, _ = _shoot(chart, center, rr, tt)
        jac_r = (
            _shoot(chart, center, rr + dr, tt)[0]
            - _shoot(chart, center, np.maximum(rr - dr, 0.0), tt)[0]
        ) / (rr + dr - np.maximum(rr - dr, 0.0))[:, None]
        jac_t = (
            _shoot(chart, center, rr, tt + dth)[0]
            - _shoot(chart, center, rr, tt - dth)[0]
        ) / (2.0 * dth)
        jac = np.stack([jac_r, jac_t], axis=-1)
        delta = np.linalg.solve(jac, (goal - p0)[..., None])[..., 0]

        best = residual[todo]
        scale = np.ones(todo.size)
        accepted = np.zeros(todo.size, dtype=bool)
        new_r, new_t = rr.copy(), tt.copy()
        for _ in range(NEWTON_MAX_HALVINGS):
            trial_r = np.abs(rr + scale * delta[:, 0])
            trial_t = tt + scale * delta[:, 1]
            trial_res = _residual(chart, center, trial_r, trial_t, goal)
            better = ~accepted & (trial_res < best)
            new_r[better], new_t[better] = trial_r[better], trial_t[better]
            best = np.where(better, trial_res, best)
            accepted |= better
            if np.all(accepted):
                break
            scale = np.where(accepted, scale, 0.5 * scale)
        r[todo], theta[todo], residual[todo] = new_r, new_t, best

        step_size = np.linalg.norm(delta, axis=-1)
        stalled = (step_size < _STAGNATION_STEP) & (best <= _STAGNATION_RESIDUAL)
        if np.all(stalled | (best <= NEWTON_TOLERANCE)):
            break

    worst = float(np.max(residual)) if residual.size else 0.0
    if worst > _STAGNATION_RESIDUAL:
        msg = (
            f"Polar shooting did not converge in {NEWTON_MAX_ITER} iterations "
            f"(residual {worst:.3g})"
        )
        raise NonconvergenceError(msg, residual=worst, iterations=iterations)
    logger.debug("Polar coordinates: %d points, %d iterations", r.size, iterations)

    det = polar_metric_det(chart, center, r, theta)
    theta = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    return PolarCoordinates(
        r=r.reshape(shape),
        theta=theta.reshape(shape),
        det_g0=det.reshape(shape),
        residual=residual.reshape(shape),
        iterations=iterations,
    )


def polar_metric_det(
    chart: MetricChart, omega: Any, r: Any, theta: Any
) -> FloatArray:
    """``|g0| = |d exp / d theta|_g^2`` at ``(r, theta)``.

    In polar normal coordinates the metric is ``dr^2 + J^2 dtheta^2``.
    """
    center = np.asarray(omega, dtype=float)
    rr, tt = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
    d_theta, point = _theta_derivative(chart, center, rr, tt)
    return metric_norm2(chart, point, d_theta)


def gauss_lemma_defect(
    chart: MetricChart, omega: Any, r: Any, theta: Any
) -> FloatArray:
    """``|<d_r exp, d_theta exp>_g|``, which vanishes by the Gauss lemma."""
    center = np.asarray(omega, dtype=float)
    rr, tt = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
    d_theta, point = _theta_derivative(chart, center, rr, tt)
    dr = POLAR_JACOBIAN_STEP * chart.scale
    d_r = (
        _shoot(chart, center, rr + dr, tt)[0] - _shoot(chart, center, rr - dr, tt)[0]
    ) / (2.0 * dr)
    return np.abs(metric_inner(chart, point, d_r, d_theta))


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _shoot(
    chart: MetricChart, omega: FloatArray, r: Any, theta: Any
) -> tuple[FloatArray, FloatArray]:
    """Fixed-step RK4 shooting; returns endpoints and an in-range mask."""
    rr, tt = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
    frame = orthonormal_frame(chart, omega)
    unit = np.stack([np.cos(tt), np.sin(tt)], axis=-1)
    v = np.einsum("ij,...j->...i", frame, unit)
    x = np.broadcast_to(omega, v.shape).copy()
    ok = np.ones(rr.shape, dtype=bool)
    h = rr / EXP_MAP_STEPS
    for _ in range(EXP_MAP_STEPS):
        step = np.where(ok, h, 0.0)
        xn, vn = rk4_step(chart, x, v, step)
        ok &= chart.boundary_sdf(xn) <= chart.margin
        x = np.where(ok[..., None], xn, x)
        v = np.where(ok[..., None], normalize(chart, xn, vn), v)
    return x, ok


def _residual(
    chart: MetricChart,
    omega: FloatArray,
    r: FloatArray,
    theta: FloatArray,
    goal: FloatArray,
) -> FloatArray:
    points, ok = _shoot(chart, omega, r, theta)
    res = np.linalg.norm(points - goal, axis=-1)
    return np.where(ok, res, np.inf)


def _theta_derivative(
    chart: MetricChart, omega: FloatArray, r: FloatArray, theta: FloatArray
) -> tuple[FloatArray, FloatArray]:
    dth = POLAR_JACOBIAN_STEP
    plus = _shoot(chart, omega, r, theta + dth)[0]
    minus = _shoot(chart, omega, r, theta - dth)[0]
    point = _shoot(chart, omega, r, theta)[0]
    return (plus - minus) / (2.0 * dth), point
