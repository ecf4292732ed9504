"""Simplicity diagnostics for 2D charts: strict convexity and conjugate points."""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import math

# Third-party
import numpy as np
from pydantic.dataclasses import dataclass

# Project/Local
from .._internal import get_logger, log_stage
from ..constants import DEFAULT_GEODESIC_STEP, JACOBI_PERTURBATION
from ..exceptions import TrappedGeodesicError
from ..protocols import BoundaryCurve, FloatArray, MetricChart
from .charts import ConformalDisc, normalize, outward_normal
from .geodesics import christoffel, trace_batch

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
_HESSIAN_STEP = 1e-5
_RAY_ANGLES = 7
_MAX_ANGLE = 0.45 * math.pi


# =============================================================================
# CORE CLASSES
# =============================================================================


@dataclass(frozen=True)
class SimplicityReport:
    """Outcome of ``simplicity_check``.

    Attributes:
        min_second_fundamental_form: Smallest sampled ``II(T, T)`` on the boundary.
        conjugate_points: Whether some sampled geodesic has a conjugate point.
        max_exit_time: Longest sampled chord (None if a geodesic was trapped).
        closed_form_curvature: Boundary geodesic curvature in closed form, when
            the chart provides one.
        passed: Strictly convex boundary and no conjugate points.
        note: Reason for a failure.
    """

    min_second_fundamental_form: float
    conjugate_points: bool
    max_exit_time: float | None
    closed_form_curvature: float | None
    passed: bool
    note: str = ""


# =============================================================================
# PUBLIC API
# =============================================================================


def simplicity_check(
    chart: MetricChart,
    n_samples: int,
    step: float = DEFAULT_GEODESIC_STEP,
) -> SimplicityReport:
    """Check strict convexity of the boundary and absence of conjugate points.

    Geodesics start at ``n_samples`` boundary points in several inward
    directions. Along each, the Jacobi field of a neighbouring geodesic
    launched from the same point is tracked; a sign change of
    ``det[xi, J]`` marks a conjugate point.

    Args:
        chart: A 2D chart with a parameterized boundary.
        n_samples: Number of boundary samples.
        step: RK4 step for the sampled geodesics.

    Returns:
        The report. Numerical outcomes never raise.

    Examples:
        >>> simplicity_check(ConformalDisc(), 16).passed
        True
    """
    if not isinstance(chart, BoundaryCurve):
        msg = "simplicity_check needs a 2D chart with a parameterized boundary"
        raise TypeError(msg)
    log_stage(logger, "simplicity_check", n_samples=n_samples, step=step)
    thetas = 2.0 * math.pi * np.arange(n_samples) / n_samples
    base = chart.boundary_point(thetas)
    tangent = normalize(chart, base, chart.boundary_velocity(thetas))
    second = second_fundamental_form(chart, base, tangent)
    min_second = float(np.min(second))

    closed = chart.boundary_curvature() if isinstance(chart, ConformalDisc) else None

    alphas = np.linspace(-_MAX_ANGLE, _MAX_ANGLE, _RAY_ANGLES)
    nu = outward_normal(chart, base)
    starts = np.repeat(base, alphas.size, axis=0)
    dirs = _directions(nu, tangent, alphas)
    nudged = _directions(nu, tangent, alphas + JACOBI_PERTURBATION)

    notes: list[str] = []
    conjugate = False
    max_exit: float | None = None
    try:
        ref = trace_batch(chart, starts, dirs, step)
        near = trace_batch(chart, starts, nudged, step)
    except TrappedGeodesicError as exc:
        logger.warning("Simplicity check found trapped geodesics: %s", exc)
        notes.append("trapped geodesic")
        conjugate = True
    else:
        max_exit = float(np.max(ref.exit_time))
        common = np.minimum(ref.n_full, near.n_full)
        width = min(ref.x.shape[1], near.x.shape[1])
        jacobi = (near.x[:, :width] - ref.x[:, :width]) / JACOBI_PERTURBATION
        velocity = ref.xi[:, :width]
        det = velocity[..., 0] * jacobi[..., 1] - velocity[..., 1] * jacobi[..., 0]
        j = np.arange(width)
        usable = (j[None, :] >= 1) & (j[None, :] <= common[:, None])
        sign0 = np.sign(det[:, min(1, width - 1)])[:, None]
        flips = usable & (np.sign(det) * sign0 < 0.0)
        conjugate = bool(np.any(flips))
        if conjugate:
            notes.append(f"conjugate points on {int(np.any(flips, axis=1).sum())} rays")

    if min_second <= 0.0:
        notes.append(f"boundary not strictly convex (min II = {min_second:.3g})")
    passed = min_second > 0.0 and not conjugate
    return SimplicityReport(
        min_second_fundamental_form=min_second,
        conjugate_points=conjugate,
        max_exit_time=max_exit,
        closed_form_curvature=closed,
        passed=passed,
        note="; ".join(notes),
    )


def second_fundamental_form(
    chart: MetricChart, x: FloatArray, tangent: FloatArray
) -> FloatArray:
    """``II(T, T) = Hess_g(sdf)(T, T) / |d sdf|_g`` at boundary points.

    Positive for a strictly convex boundary with the outward normal.
    """
    dim = x.shape[-1]
    cols = []
    for c in range(dim):
        shift = np.zeros(dim)
        shift[c] = _HESSIAN_STEP
        grad_plus = chart.sdf_gradient(x + shift)
        grad_minus = chart.sdf_gradient(x - shift)
        cols.append((grad_plus - grad_minus) / (2.0 * _HESSIAN_STEP))
    hess = np.stack(cols, axis=-1)
    grad = chart.sdf_gradient(x)
    gamma = christoffel(chart, x)
    covariant = hess - np.einsum("...kij,...k->...ij", gamma, grad)
    ginv = np.linalg.inv(chart.g_eval(x))
    grad_norm = np.sqrt(np.einsum("...i,...ij,...j->...", grad, ginv, grad))
    value = np.einsum("...i,...ij,...j->...", tangent, covariant, tangent)
    return value / grad_norm


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _directions(nu: FloatArray, tangent: FloatArray, alphas: FloatArray) -> FloatArray:
    """``-cos(alpha) nu + sin(alpha) T`` for every base point and angle."""
    c = np.cos(alphas)[None, :, None]
    s = np.sin(alphas)[None, :, None]
    dirs = -c * nu[:, None, :] + s * tangent[:, None, :]
    return dirs.reshape(-1, nu.shape[-1])
