"""Integral and pointwise identities behind the uniqueness argument.

* ``conformal_reduction_check``: ``(cg, gamma)`` and ``(g, c^((n-2)/2) gamma)``
  give the same solutions, with normal derivatives related by ``c^(-1/2)``.
* ``alessandrini_check``: the interior pairing of
  ``gamma1^(1/2) grad gamma2^(1/2) - gamma2^(1/2) grad gamma1^(1/2)`` with
  ``grad(u1 u2)`` equals the boundary term ``int gamma1 d_nu(u1~ - u2) u1``.
* ``alessandrini_refinement``: the observed order of that identity under grid
  refinement.
* ``log_quotient_pde_residual``: the second-order equation for
  ``log gamma1 - log gamma2`` agrees with its divergence form.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from collections.abc import Callable, Sequence
from dataclasses import dataclass as std_dataclass
from typing import Any

# Third-party
import numpy as np
from numpy.typing import NDArray
from pydantic.dataclasses import dataclass

# Project/Local
from .._internal import get_logger, log_check, log_stage
from ..constants import DEFAULT_SEED
from ..exceptions import RateFitError
from ..grids import face_slices, jet
from .chart import BoxChart
from .solver import BoundaryData, ConductivityField, DirichletSolver

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
FloatArray = NDArray[np.float64]
ScalarFn = Callable[[FloatArray], FloatArray]

ROUTE_TOLERANCE = 1e-6
JET_STEP = 1e-3
# Identity defects below this are roundoff, not discretization error
REFINEMENT_FLOOR = 1e-10


# =============================================================================
# CORE CLASSES
# =============================================================================
@dataclass(frozen=True)
class ConformalReport:
    """Residuals of the conformal reduction.

    Attributes:
        solution_error: Max relative difference of the two interior solutions.
        flux_error: Max relative defect of ``(d_nu u)_cg = c^(-1/2) (d_nu u)_g``.
        operator_error: Relative defect of the pointwise operator identity.
    """

    solution_error: float
    flux_error: float
    operator_error: float

    @property
    def max_error(self) -> float:
        return max(self.solution_error, self.flux_error, self.operator_error)


@dataclass(frozen=True)
class AlessandriniReport:
    """Both sides of the integral identity.

    Attributes:
        lhs: Interior integral.
        rhs: Boundary integral.
        scale: L1 norm of the interior integrand (normalizes the error).
    """

    lhs: float
    rhs: float
    scale: float

    @property
    def rel_err(self) -> float:
        scale = max(self.scale, abs(self.rhs))
        if scale == 0.0:
            return 0.0
        return abs(self.lhs - self.rhs) / scale


@std_dataclass(frozen=True)
class LogQuotientReport:
    """The log-quotient expression and its divergence form at the chart nodes.

    Attributes:
        expression: ``1/2 Lap(l1 - l2) + 1/4 <grad(l1 + l2), grad(l1 - l2)>``.
        divergence_form: ``(g1 g2)^(-1/2) div(g2^(1/2) grad g1^(1/2) - ...)``.
        boundary_mismatch: ``max |log gamma1 - log gamma2|`` on the boundary.
    """

    expression: FloatArray
    divergence_form: FloatArray
    boundary_mismatch: float

    @property
    def rel_err(self) -> float:
        scale = max(
            float(np.abs(self.expression).max()),
            float(np.abs(self.divergence_form).max()),
        )
        if scale == 0.0:
            return 0.0
        return float(np.abs(self.expression - self.divergence_form).max()) / scale

    @property
    def residual(self) -> float:
        """Largest violation of the boundary value problem ``l1 - l2 = 0``."""
        return max(float(np.abs(self.expression).max()), self.boundary_mismatch)


# =============================================================================
# PUBLIC API
# =============================================================================


def conformal_reduction_check(
    chart: BoxChart,
    c: ScalarFn,
    gamma: ConductivityField,
    f: BoundaryData,
    seed: int = DEFAULT_SEED,
) -> ConformalReport:
    """Compare the conductivity problems for ``(cg, gamma)`` and ``(g, gamma~)``.

    Args:
        chart: Box chart carrying ``g``.
        c: Positive conformal factor.
        gamma: Conductivity with a closed form or nodal values.
        f: Dirichlet data shared by both problems.
        seed: Seed of the random smooth test function.

    Returns:
        The three relative residuals.
    """
    n = chart.dim
    conformal = chart.scaled(c)
    tilde = gamma.scaled(chart, lambda x: np.asarray(c(x)) ** (0.5 * (n - 2)))
    u_cg = DirichletSolver(conformal, gamma).solve(f)
    u_g = DirichletSolver(chart, tilde).solve(f)
    solution_error = _relative(u_cg - u_g, u_g)

    calc_cg = conformal.calculus()
    calc_g = chart.calculus()
    c_nodes = np.asarray(c(chart.grid.points())).reshape(chart.grid.shape)
    defect = 0.0
    scale = 0.0
    for axis, side, index in face_slices(chart.dim):
        d_cg = calc_cg.normal_derivative(u_cg, axis, side, index)
        d_g = c_nodes[index] ** -0.5 * calc_g.normal_derivative(u_g, axis, side, index)
        defect = max(defect, float(np.abs(d_cg - d_g).max()))
        scale = max(scale, float(np.abs(d_g).max()))
    flux_error = defect / scale if scale > 0.0 else defect

    w = _random_smooth(chart, seed)
    flux_cg = [gamma.values * d for d in calc_cg.gradient(w)]
    lhs = calc_cg.divergence(flux_cg) * c_nodes ** (0.5 * n)
    rhs = calc_g.divergence([tilde.values * d for d in calc_g.gradient(w)])
    operator_error = _relative(lhs - rhs, rhs)

    report = ConformalReport(
        solution_error=solution_error,
        flux_error=flux_error,
        operator_error=operator_error,
    )
    passed = report.max_error <= ROUTE_TOLERANCE
    log_check(logger, "conformal_reduction", report.max_error, ROUTE_TOLERANCE, passed)
    return report


def alessandrini_check(
    chart: BoxChart,
    gamma1: ConductivityField,
    gamma2: ConductivityField,
    u1: Any,
    u2: Any,
) -> AlessandriniReport:
    """Evaluate both sides of the boundary integral identity.

    ``u1~`` solves the ``gamma1`` problem with boundary data ``u2``; the
    boundary side is then ``int gamma1 d_nu(u1~ - u2) u1 dS_g``, computed from
    the discrete currents of both solvers. The interior side uses fourth-order
    differences and Simpson quadrature.

    Args:
        chart: The box chart.
        gamma1: First conductivity.
        gamma2: Second conductivity (same trace and normal derivative).
        u1: Discrete ``gamma1`` solution on the chart nodes.
        u2: Discrete ``gamma2`` solution on the chart nodes.

    Returns:
        Both sides and the integrand scale.
    """
    first = DirichletSolver(chart, gamma1)
    second = DirichletSolver(chart, gamma2)
    f1 = chart.trace(u1)
    f2 = chart.trace(u2)
    rhs = float(np.real(np.sum((first.flux(f2) - second.flux(f2)) * f1)))

    calc = chart.calculus()
    a = np.sqrt(gamma1.values)
    b = np.sqrt(gamma2.values)
    field = [
        a * db - b * da
        for da, db in zip(calc.gradient(a), calc.gradient(b), strict=True)
    ]
    product = np.asarray(u1) * np.asarray(u2)
    integrand = np.real(
        sum(x * d for x, d in zip(field, calc.partials(product), strict=True))
    )
    lhs = float(calc.integrate(integrand))
    scale = float(calc.integrate(np.abs(integrand)))
    report = AlessandriniReport(lhs=lhs, rhs=rhs, scale=scale)
    log_stage(logger, "alessandrini", lhs=lhs, rhs=rhs, rel_err=report.rel_err)
    return report


def alessandrini_refinement(
    shapes: Sequence[tuple[int, ...]],
    gamma1: ScalarFn,
    gamma2: ScalarFn,
    f1: BoundaryData,
    f2: BoundaryData,
    floor: float = REFINEMENT_FLOOR,
) -> tuple[list[float], float]:
    """Identity defects on the unit segment boxes of ``shapes`` and their order.

    The order is the least-squares slope of ``log(err)`` against ``log(h)``
    over the levels whose defect is above ``floor``.

    Raises:
        RateFitError: If fewer than two levels are above the floor.
    """
    errors: list[float] = []
    spacings: list[float] = []
    for shape in shapes:
        chart = BoxChart.segment(shape)
        g1 = ConductivityField.from_function(chart, gamma1)
        g2 = ConductivityField.from_function(chart, gamma2)
        u1 = DirichletSolver(chart, g1).solve(f1)
        u2 = DirichletSolver(chart, g2).solve(f2)
        errors.append(alessandrini_check(chart, g1, g2, u1, u2).rel_err)
        spacings.append(chart.grid.spacing[0])
    kept = [(h, e) for h, e in zip(spacings, errors, strict=True) if e > floor]
    if len(kept) < 2:
        msg = f"Need two levels with a defect above {floor:.1e}, got {errors}"
        raise RateFitError(msg)
    h, e = np.log(np.asarray(kept)).T
    order = float(np.polyfit(h, e, 1)[0])
    log_stage(logger, "alessandrini_refinement", errors=errors, order=order)
    return errors, order


def log_quotient_pde_residual(
    chart: BoxChart,
    gamma1: ScalarFn,
    gamma2: ScalarFn,
    step: float = JET_STEP,
) -> LogQuotientReport:
    """Evaluate the log-quotient equation two ways at the chart nodes.

    Args:
        chart: Box chart (its metric may vary).
        gamma1: First conductivity as a callable.
        gamma2: Second conductivity as a callable.
        step: Finite-difference step of the pointwise jets.

    Returns:
        Both fields and the boundary mismatch of ``log gamma1 - log gamma2``.

    Examples:
        >>> chart = BoxChart.segment((5, 3, 3))
        >>> same = lambda x: 1.0 + 0.1 * x[:, 0]
        >>> log_quotient_pde_residual(chart, same, same).rel_err
        0.0
    """
    points = chart.grid.points()
    g = chart.metric_at(points)
    inverse = 1.0 / g
    drift = _metric_drift(chart, points, step)

    l1 = jet(lambda x: np.log(gamma1(x)), points, step)
    l2 = jet(lambda x: np.log(gamma2(x)), points, step)
    d_grad, d_second = l1[1] - l2[1], l1[2] - l2[2]
    s_grad = l1[1] + l2[1]
    laplace = np.sum(inverse * d_second + drift * d_grad, axis=-1)
    expression = 0.5 * laplace + 0.25 * np.sum(inverse * s_grad * d_grad, axis=-1)

    a_val, a_grad, a_second = jet(lambda x: np.sqrt(gamma1(x)), points, step)
    b_val, b_grad, b_second = jet(lambda x: np.sqrt(gamma2(x)), points, step)
    flow = b_val[:, None] * a_grad - a_val[:, None] * b_grad
    curl = b_val[:, None] * a_second - a_val[:, None] * b_second
    divergence = np.sum(drift * flow + inverse * curl, axis=-1)
    divergence_form = divergence / (a_val * b_val)

    boundary = chart.boundary.points
    mismatch = np.log(gamma1(boundary)) - np.log(gamma2(boundary))
    shape = chart.grid.shape
    report = LogQuotientReport(
        expression=expression.reshape(shape),
        divergence_form=divergence_form.reshape(shape),
        boundary_mismatch=float(np.abs(mismatch).max()),
    )
    passed = report.rel_err <= ROUTE_TOLERANCE
    log_check(logger, "log_quotient_routes", report.rel_err, ROUTE_TOLERANCE, passed)
    return report


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _metric_drift(chart: BoxChart, points: FloatArray, step: float) -> FloatArray:
    """``d_i(|g|^(1/2) g^ii) / |g|^(1/2)`` per axis."""
    sqrt_det = np.sqrt(np.prod(chart.metric_at(points), axis=-1))
    columns = []
    for i in range(chart.dim):

        def weight(x: FloatArray, i: int = i) -> FloatArray:
            metric = chart.metric_at(x)
            return np.sqrt(np.prod(metric, axis=-1)) / metric[..., i]

        _, grad, _ = jet(weight, points, step)
        columns.append(grad[:, i])
    return np.stack(columns, axis=-1) / sqrt_det[:, None]


def _random_smooth(chart: BoxChart, seed: int, modes: int = 3) -> FloatArray:
    """Seeded trigonometric test function on the chart nodes."""
    rng = np.random.default_rng(seed)
    points = chart.grid.points()
    values = np.zeros(points.shape[0])
    for _ in range(modes):
        k = rng.uniform(-2.0, 2.0, chart.dim)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        values += rng.standard_normal() * np.sin(points @ k + phase)
    return values.reshape(chart.grid.shape)


def _relative(diff: Any, reference: Any) -> float:
    scale = float(np.abs(reference).max())
    error = float(np.abs(diff).max())
    return error / scale if scale > 0.0 else error
