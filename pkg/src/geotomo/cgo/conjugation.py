"""Conjugated conductivity operators on the extended cylinder.

With ``A = -grad_g log(gamma)`` the conductivity equation is
``(-Delta_g + <A, grad_g>) u = 0``. Conjugating by ``exp(-phi_tau / 2)``
gives ``-Delta_g + <A - A_tau, grad_g> + q_tau``, and a further conjugation
by ``exp(t x1)`` gives ``-Delta_{g,t} + <A - A_tau, grad_g> + q~_tau`` with
``-Delta_{g,t} = -Delta_g - 2 t d1 - t^2`` and ``q~_tau = q_tau + t (A - A_tau)_1``.
The CGO of sign ``s`` uses ``t = -s tau``.
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

# Project/Local
from .._internal import get_logger, log_stage
from ..geometry.charts import ConformalDisc
from ..grids import jet
from ..protocols import FloatArray
from .cylinder import ExtendedCylinder
from .mollify import MollifiedFamily

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
PointField = Callable[[FloatArray], Any]
"""Callable on cylinder points of shape ``(m, 3)``."""

_JET_STEP = 1e-3


# =============================================================================
# CORE CLASSES
# =============================================================================


@dataclass(frozen=True)
class ConjugatedOperator:
    """``P_t = -Delta_{g,t} + <B, grad_g> + q~`` on the cylinder grid.

    Attributes:
        cylinder: Grid and discrete operators.
        t: Conjugation parameter (``-s tau``).
        tau: The family parameter.
        b: Covariant components of ``B = A - A_tau``.
        q_tau: First-conjugation potential.
        q_tilde: ``q_tau + t * b_1``.
    """

    cylinder: ExtendedCylinder
    t: float
    tau: float
    b: list[FloatArray]
    q_tau: FloatArray
    q_tilde: FloatArray

    @property
    def is_free(self) -> bool:
        """Whether the perturbation vanishes identically."""
        return not (np.any(self.q_tilde) or any(np.any(c) for c in self.b))

    def perturbation(self, u: Any) -> Any:
        """``<B, grad_g u> + q~ u``."""
        cyl = self.cylinder
        return cyl.restrict(cyl.covector_apply(self.b, u) + self.q_tilde * u)

    def perturbation_adjoint(self, v: Any) -> Any:
        cyl = self.cylinder
        return cyl.covector_adjoint(self.b, v) + cyl.restrict(self.q_tilde * v)

    def apply(self, u: Any) -> Any:
        return self.cylinder.shifted_apply(u, self.t) + self.perturbation(u)


@dataclass(frozen=True)
class ConjugationDefect:
    """Both sides of a conjugation identity at sample points."""

    lhs: Any
    rhs: Any
    rel_err: float


# =============================================================================
# PUBLIC API
# =============================================================================


def conjugate(
    cylinder: ExtendedCylinder,
    family: MollifiedFamily,
    tau: float,
    sign: int = 1,
) -> ConjugatedOperator:
    """Coefficients of the twice-conjugated operator at ``tau``.

    ``family`` must live on ``cylinder.calculus()``.
    """
    if sign not in (1, -1):
        msg = f"CGO sign must be +1 or -1, got {sign}"
        raise ValueError(msg)
    if family.gamma.shape != cylinder.shape:
        msg = f"Family grid {family.gamma.shape} != cylinder grid {cylinder.shape}"
        raise ValueError(msg)
    t = -sign * float(tau)
    log_stage(logger, "conjugate", tau=tau, t=t)
    snap = family.snapshot(abs(tau))
    metric = (np.ones(cylinder.shape), cylinder.sigma, cylinder.sigma)
    b = [
        cylinder.restrict(g * (a - a_t))
        for g, a, a_t in zip(metric, family.a_field, snap.a_tau, strict=True)
    ]
    q_tau = cylinder.restrict(snap.q_tau)
    return ConjugatedOperator(
        cylinder=cylinder,
        t=t,
        tau=float(tau),
        b=b,
        q_tau=q_tau,
        q_tilde=q_tau + t * b[0],
    )


def first_conjugation_defect(
    base: ConformalDisc,
    gamma: PointField,
    phi_tau: PointField,
    v: PointField,
    points: FloatArray,
    step: float = _JET_STEP,
) -> ConjugationDefect:
    """Compare ``e^{phi_tau/2} L e^{-phi_tau/2} v`` with the conjugated form.

    All derivatives are pointwise fourth-order differences of the callables,
    so the defect measures the algebra, not a grid.

    Examples:
        >>> x = np.array([[0.5, 0.1, 0.0]])
        >>> g = lambda p: 1.0 + 0.2 * np.exp(-np.sum(p**2, axis=-1))
        >>> one = lambda p: np.ones(len(p))
        >>> first_conjugation_defect(ConformalDisc(), g, one, one, x).rel_err < 1e-6
        True
    """
    sigma = _sigma(base, points)
    log_gamma = _compose(np.log, gamma)
    u = _product(_exp_half(phi_tau, -1.0), v)
    half = _exp_half(phi_tau, 1.0)(points)

    lhs = half * (
        -_laplacian(u, points, sigma, step)
        - _pairing(log_gamma, u, points, sigma, step)
    )
    _, dphi, d2phi = jet(phi_tau, points, step)
    _, dlog, _ = jet(log_gamma, points, step)
    v0, dv, _ = jet(v, points, step)
    div_a_tau = -_metric_trace(d2phi, sigma)
    norm_a_tau = _metric_pair(dphi, dphi, sigma)
    cross = _metric_pair(dlog, dphi, sigma)
    q_tau = -0.5 * div_a_tau - 0.25 * norm_a_tau + 0.5 * cross
    b_pair = _metric_pair(dphi - dlog, dv, sigma)
    rhs = -_laplacian(v, points, sigma, step) + b_pair + q_tau * v0
    return _defect(lhs, rhs)


def second_conjugation_defect(
    base: ConformalDisc,
    b: PointField,
    q_tau: PointField,
    w: PointField,
    t: float,
    points: FloatArray,
    step: float = _JET_STEP,
) -> ConjugationDefect:
    """Compare ``e^{-t x1} (-Delta + <B, grad> + q_tau) e^{t x1} w`` with P_t.

    ``b`` returns covariant components of shape ``(m, 3)``.
    """
    sigma = _sigma(base, points)

    def lifted(p: FloatArray) -> Any:
        return np.exp(t * p[:, 0]) * np.asarray(w(p))

    _, d_lift, _ = jet(lifted, points, step)
    coeff = np.asarray(b(points))
    q = np.asarray(q_tau(points))
    damp = np.exp(-t * points[:, 0])
    lhs = damp * (
        -_laplacian(lifted, points, sigma, step)
        + _covector(coeff, d_lift, sigma)
        + q * lifted(points)
    )
    w0, dw, d2w = jet(w, points, step)
    shifted = -_metric_trace(d2w, sigma) - 2.0 * t * dw[:, 0] - t * t * w0
    rhs = shifted + _covector(coeff, dw, sigma) + (q + t * coeff[:, 0]) * w0
    return _defect(lhs, rhs)


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _sigma(base: ConformalDisc, points: FloatArray) -> FloatArray:
    return base.conformal_factor(points[:, 1:])


def _metric_trace(second: FloatArray, sigma: FloatArray) -> Any:
    """``Delta_g`` from pure second partials; ``sigma`` does not depend on x1."""
    return second[:, 0] + (second[:, 1] + second[:, 2]) / sigma


def _metric_pair(a: Any, b: Any, sigma: FloatArray) -> Any:
    """``g^{ii} a_i b_i`` for covariant (gradient) components."""
    return a[:, 0] * b[:, 0] + (a[:, 1] * b[:, 1] + a[:, 2] * b[:, 2]) / sigma


def _covector(coeff: Any, grad: Any, sigma: FloatArray) -> Any:
    return _metric_pair(coeff, grad, sigma)


def _laplacian(
    f: PointField, points: FloatArray, sigma: FloatArray, step: float
) -> Any:
    _, _, second = jet(f, points, step)
    return _metric_trace(second, sigma)


def _pairing(
    log_gamma: PointField,
    u: PointField,
    points: FloatArray,
    sigma: FloatArray,
    step: float,
) -> Any:
    """``<grad log(gamma), grad u>_g`` (so ``<A, grad u> = -`` this)."""
    _, dlog, _ = jet(log_gamma, points, step)
    _, du, _ = jet(u, points, step)
    return _metric_pair(dlog, du, sigma)


def _compose(outer: Callable[[Any], Any], inner: PointField) -> PointField:
    return lambda p: outer(np.asarray(inner(p)))


def _product(f: PointField, g: PointField) -> PointField:
    return lambda p: np.asarray(f(p)) * np.asarray(g(p))


def _exp_half(phi: PointField, sign: float) -> PointField:
    return lambda p: np.exp(0.5 * sign * np.asarray(phi(p)))


def _defect(lhs: Any, rhs: Any) -> ConjugationDefect:
    scale = max(float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))), 1e-300)
    rel = float(np.max(np.abs(lhs - rhs))) / scale
    return ConjugationDefect(lhs=lhs, rhs=rhs, rel_err=rel)
