"""Assembly of complex geometrical optics solutions.

A CGO of sign ``s`` for the conductivity equation on the cylinder reads
``u = exp(-phi_tau / 2) exp(-s tau x1) (exp(-i s tau r) a + r~)`` with
amplitude ``a = |g0|^(-1/4) exp(i lambda (x1 + i r)) b(theta)`` in polar
normal coordinates about ``omega``. The leading term is built from pointwise
jets of the polar coordinates; the remainder solves ``P_t r~ = -F`` with the
perturbed inverse, where ``F`` is the cut-off error of the leading term.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass as std_dataclass
from dataclasses import replace
from typing import Any, Literal

# Third-party
import numpy as np
from pydantic import Field
from pydantic.dataclasses import dataclass

# Project/Local
from .._internal import get_logger, log_stage
from .._internal.parallel import map_chunks
from ..constants import (
    CUTOFF_WIDTH,
    DEFAULT_ETA,
    DEFAULT_OMEGA,
    DEFAULT_SEED,
    RATE_SLACK,
    TAU_MIN_G0,
)
from ..exceptions import AssemblyError, DomainError
from ..geometry.polar import polar_coords
from ..grids import DiagonalCalculus, jet
from ..protocols import FloatArray
from ..rates import RateReport, check_ladder, rate_report
from ..ray_transform.pairing import AngularProfile
from .conjugation import ConjugatedOperator, conjugate
from .cylinder import ComplexArray, ExtendedCylinder
from .mollify import MollifiedFamily, bump_conductivity
from .perturbed import PerturbedInverse
from .shifted import ShiftedInverse, solve_with_retry

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
AMPLITUDE_STEP = 5e-3
"""Stencil step of the polar-coordinate jets."""

# Weak-form test bumps, inside M for the default cylinder
_TEST_CENTERS = ((0.5, 0.0, 0.0), (0.35, 0.15, -0.1), (0.65, -0.1, 0.2))
_TEST_WIDTH = 0.2


# =============================================================================
# CORE CLASSES
# =============================================================================


@dataclass(frozen=True)
class CGOParams:
    """Parameters of one CGO.

    Attributes:
        tau: Decay parameter (positive; the direction is ``sign``).
        lam: Frequency ``lambda`` of the amplitude in ``x1 + i r``.
        omega: Polar center in the enlarged disc, outside M0.
        profile: Angular profile ``b``; ``None`` means ``b = 1``.
        eta: Regularity exponent of the rate targets.
        sign: ``+1`` for ``u1``, ``-1`` for the conjugate family ``u2``.
        tau_min: Smallest admissible ``tau``.
    """

    tau: float = Field(gt=0.0)
    lam: float = 0.0
    omega: tuple[float, float] = DEFAULT_OMEGA
    profile: AngularProfile | None = None
    eta: float = Field(default=DEFAULT_ETA, gt=0.0)
    sign: Literal[1, -1] = 1
    tau_min: float = Field(default=TAU_MIN_G0, gt=0.0)

    def __post_init__(self) -> None:
        if self.tau < self.tau_min:
            msg = f"tau = {self.tau:.4g} is below the minimum {self.tau_min:.4g}"
            raise ValueError(msg)

    @property
    def kappa(self) -> float:
        """Signed phase frequency ``s tau``."""
        return self.sign * self.tau


@std_dataclass(frozen=True)
class CGOSolution:
    """A CGO and its parts on the cylinder grid.

    Attributes:
        params: Parameters, with ``tau`` as actually used after retries.
        cylinder: The extended cylinder.
        t: Conjugation parameter ``-s tau``.
        phi_tau: Mollified log-conductivity at ``tau``.
        leading: ``exp(-i s tau r) a`` on the support of the transversal cutoff.
        r_tilde: The remainder.
        u: The assembled solution.
        eikonal: ``|grad r|_g0^2 - 1`` on transversal nodes (zero off support).
        transport: Transport-equation residual of ``a`` (complex, 3D).
        phase_error: ``exp(i s tau r) (-Delta_{g,t})(exp(-i s tau r) a)``.
        norms: ``||r~||_{H^s(M)}`` for s in {0, 1, 2}.
        weak_residual: Relative weak-form residual of ``div(gamma grad u)``.
    """

    params: CGOParams
    cylinder: ExtendedCylinder
    t: float
    phi_tau: FloatArray
    leading: ComplexArray
    r_tilde: ComplexArray
    u: ComplexArray
    eikonal: FloatArray
    transport: ComplexArray
    phase_error: ComplexArray
    norms: dict[int, float]
    weak_residual: float

    def assemble(self) -> ComplexArray:
        """Recombine ``u`` from ``phi_tau``, ``leading`` and ``r_tilde``."""
        return _assemble(
            self.cylinder, self.phi_tau, self.t, self.leading, self.r_tilde
        )

    @property
    def phase_norm(self) -> float:
        return self.cylinder.norm(self.phase_error, self.cylinder.in_m)

    @property
    def residual_bound(self) -> float:
        """Discretization scale ``(tau h)^2`` the weak residual is held to."""
        cyl = self.cylinder
        return (self.params.tau * max(cyl.h1, cyl.h)) ** 2

    def envelope_defect(self) -> tuple[float, float]:
        """``max | |u e^{phi_tau/2} e^{-t x1}| - |a| |`` and ``max |r~|`` on M.

        The first never exceeds the second.
        """
        cyl = self.cylinder
        x1 = cyl.x1[:, None, None]
        stripped = self.u * np.exp(0.5 * self.phi_tau - self.t * x1)
        gap = np.abs(np.abs(stripped) - np.abs(self.leading))
        return (
            float(np.max(gap[cyl.in_m])),
            float(np.max(np.abs(self.r_tilde[cyl.in_m]))),
        )

    def rows(self) -> Iterator[dict[str, float | int]]:
        """CSV rows ``(i, j, k, Re u, Im u, Re r~, Im r~)`` over M."""
        for i, j, k in zip(*np.nonzero(self.cylinder.in_m), strict=True):
            u = complex(self.u[i, j, k])
            r = complex(self.r_tilde[i, j, k])
            yield {
                "i": int(i),
                "j": int(j),
                "k": int(k),
                "re_u": u.real,
                "im_u": u.imag,
                "re_r": r.real,
                "im_r": r.imag,
            }


@std_dataclass(frozen=True)
class _AmplitudeJets:
    """Polar data on the transversal support nodes."""

    support: Any
    sigma: FloatArray
    r: FloatArray
    dr: FloatArray
    lap_r: FloatArray
    alpha: FloatArray
    dalpha: FloatArray
    lap_alpha: FloatArray


# =============================================================================
# PUBLIC API
# =============================================================================


def build_cgo(
    params: CGOParams,
    family: MollifiedFamily,
    cylinder: ExtendedCylinder,
    *,
    seed: int = DEFAULT_SEED,
) -> CGOSolution:
    """Assemble the CGO of ``params`` for the conductivity of ``family``.

    ``family`` must live on ``cylinder.calculus()``. Exceptional ``tau`` are
    nudged by ``solve_with_retry``; ``params.tau`` of the result is the value
    used.

    Raises:
        DomainError: If ``omega`` lies inside M0.
        ExceptionalTauError: If every retry was exceptional.
        NeumannDivergenceError: If ``||K|| >= 1`` at this ``tau``.
        NonconvergenceError: If the perturbed inverse misses its residual.
        AssemblyError: If the assembled solution is not finite.
    """
    base = cylinder.base
    if float(np.hypot(*params.omega)) <= base.radius:
        msg = f"Polar center {params.omega} must lie outside M0"
        raise DomainError(msg)

    def prepare(tau: float) -> PerturbedInverse:
        op = conjugate(cylinder, family, tau, params.sign)
        g0 = ShiftedInverse(cylinder, op.t, tau_min=params.tau_min)
        return PerturbedInverse(op, g0, seed=seed)

    inverse, tau = solve_with_retry(prepare, params.tau)
    params = replace(params, tau=tau)
    op = inverse.operator
    kappa = params.kappa
    log_stage(logger, "build_cgo", tau=tau, sign=params.sign, lam=params.lam)

    jets = _amplitude_jets(cylinder, params)
    sup = jets.support
    phase = np.exp(1j * params.lam * cylinder.x1)[:, None]
    a = phase * jets.alpha[None, :]
    oscillation = np.exp(-1j * kappa * jets.r)[None, :]

    eikonal = np.sum(jets.dr**2, axis=-1) / jets.sigma - 1.0
    pair = np.sum(jets.dr * jets.dalpha, axis=-1) / jets.sigma
    transport = phase * (
        2.0 * pair + jets.alpha * jets.lap_r + 2.0 * params.lam * jets.alpha
    )[None, :]
    lap_a = phase * (jets.lap_alpha - params.lam**2 * jets.alpha)[None, :]
    free = -lap_a + kappa**2 * eikonal[None, :] * a + 1j * kappa * transport
    perturbation = _perturbation(op, jets, phase, kappa, params.lam)
    forcing = oscillation * (free + perturbation)

    cutoff = cylinder.x1_cutoff(CUTOFF_WIDTH)[:, None] * (
        cylinder.transversal_cutoff(CUTOFF_WIDTH)[sup][None, :]
    )
    rhs = _scatter(cylinder, cutoff * forcing)
    r_tilde = -inverse(rhs)
    leading = _scatter(cylinder, oscillation * a)
    phi_tau = family.phi_tau(tau)
    u = _assemble(cylinder, phi_tau, op.t, leading, r_tilde)
    if not np.all(np.isfinite(u)):
        msg = f"Assembled CGO is not finite at tau={tau:.4g}"
        raise AssemblyError(msg)

    eik_field = np.zeros(cylinder.mask2d.shape)
    eik_field[sup] = eikonal
    residual = weak_residual(u, family.gamma, cylinder.calculus())
    if not math.isfinite(residual):
        msg = f"Weak residual overflow at tau={tau:.4g}"
        raise AssemblyError(msg)
    solution = CGOSolution(
        params=params,
        cylinder=cylinder,
        t=op.t,
        phi_tau=phi_tau,
        leading=leading,
        r_tilde=r_tilde,
        u=u,
        eikonal=eik_field,
        transport=_scatter(cylinder, transport),
        phase_error=_scatter(cylinder, free),
        norms=cylinder.sobolev_norms(r_tilde),
        weak_residual=residual,
    )
    logger.info(
        "CGO at tau=%.4g: ||r~||_L2=%.3g, phase=%.3g, weak residual=%.3g",
        tau,
        solution.norms[0],
        solution.phase_norm,
        residual,
    )
    return solution


def weak_residual(
    u: Any,
    gamma: Any,
    calc: DiagonalCalculus,
    centers: Sequence[Sequence[float]] = _TEST_CENTERS,
    width: float = _TEST_WIDTH,
) -> float:
    """Largest relative ``|int gamma <grad u, grad psi>_g|`` over test bumps.

    Each pairing is divided by ``||gamma grad u||_{L^2(supp psi)}`` times
    ``||grad psi||_{L^2}``, so the value is scale-free in ``u``.
    """
    grad_u = calc.partials(u)
    worst = 0.0
    for center in centers:
        psi = bump_conductivity(calc.grid, center, width, amplitude=1.0) - 1.0
        grad_psi = calc.partials(psi)
        flux = sum(
            du * dp / g
            for du, dp, g in zip(grad_u, grad_psi, calc.metric, strict=True)
        )
        value = abs(complex(calc.integrate(gamma * flux)))
        inside = psi > 0.0
        scale = calc.l2_norm(inside * gamma * np.sqrt(calc.grad_norm2(u)))
        scale *= calc.l2_norm(np.sqrt(calc.grad_norm2(psi)))
        if scale > 0.0:
            worst = max(worst, value / scale)
    return worst


def cgo_rate_reports(
    params: CGOParams,
    family: MollifiedFamily,
    cylinder: ExtendedCylinder,
    taus: Sequence[float],
    slack: float = RATE_SLACK,
) -> list[RateReport]:
    """Ladder fits of the phase error and the remainder norms.

    ``||phase_error||_L2`` must stay ``O(1)`` and ``||r~||_{H^s}`` must decay
    like ``tau^(-1/2 - eta + s)``.

    Raises:
        ConfigError: If the ladder is not geometric with at least five points.
    """
    ladder = check_ladder(taus)
    log_stage(logger, "cgo_rate_reports", taus=ladder, sign=params.sign)
    solutions = map_chunks(
        lambda tau: build_cgo(replace(params, tau=tau), family, cylinder), ladder
    )
    used = [s.params.tau for s in solutions]
    reports = [
        rate_report("phase.L2", used, [s.phase_norm for s in solutions], 0.0, slack)
    ]
    for s in (0, 1, 2):
        reports.append(
            rate_report(
                f"r_tilde.H{s}",
                used,
                [sol.norms[s] for sol in solutions],
                -0.5 - params.eta + s,
                slack,
                require_monotone=False,
            )
        )
    return reports


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _assemble(
    cylinder: ExtendedCylinder,
    phi_tau: FloatArray,
    t: float,
    leading: ComplexArray,
    r_tilde: ComplexArray,
) -> ComplexArray:
    x1 = cylinder.x1[:, None, None]
    return np.exp(-0.5 * phi_tau + t * x1) * (leading + r_tilde)


def _scatter(cylinder: ExtendedCylinder, values: Any) -> ComplexArray:
    """Place ``(n_x1, m)`` support values into a full cylinder field."""
    out = np.zeros(cylinder.shape, dtype=complex)
    out[:, _support(cylinder)] = values
    return out


def _support(cylinder: ExtendedCylinder) -> Any:
    return cylinder.mask2d & (cylinder.transversal_cutoff(CUTOFF_WIDTH) > 0.0)


def _amplitude_jets(cylinder: ExtendedCylinder, params: CGOParams) -> _AmplitudeJets:
    """Jets of ``r`` and ``alpha = |g0|^(-1/4) exp(-lambda r) b(theta)``."""
    support = _support(cylinder)
    points = cylinder.transversal_points[support]
    base = cylinder.base
    profile = params.profile

    def fields(p: FloatArray) -> FloatArray:
        polar = polar_coords(base, params.omega, p)
        b = 1.0 if profile is None else profile(polar.theta)
        alpha = polar.det_g0**-0.25 * np.exp(-params.lam * polar.r) * b
        return np.stack([polar.r, alpha], axis=-1)

    value, first, second = jet(fields, points, AMPLITUDE_STEP)
    sigma = cylinder.sigma2d[support]
    return _AmplitudeJets(
        support=support,
        sigma=sigma,
        r=value[:, 0],
        dr=first[:, 0, :],
        lap_r=np.sum(second[:, 0, :], axis=-1) / sigma,
        alpha=value[:, 1],
        dalpha=first[:, 1, :],
        lap_alpha=np.sum(second[:, 1, :], axis=-1) / sigma,
    )


def _perturbation(
    op: ConjugatedOperator,
    jets: _AmplitudeJets,
    phase: ComplexArray,
    kappa: float,
    lam: float,
) -> ComplexArray:
    """``e^{i kappa r} (<B, grad> + q~)(e^{-i kappa r} a)`` on the support.

    ``phase`` is the x1 factor ``exp(i lambda x1)`` of shape ``(n_x1, 1)``.
    """
    a = phase * jets.alpha[None, :]
    if op.is_free:
        return np.zeros_like(a)
    sup = jets.support
    b1, b2, b3 = (c[:, sup] for c in op.b)
    sigma = jets.sigma[None, :]
    along_alpha = (b2 * jets.dalpha[:, 0] + b3 * jets.dalpha[:, 1]) / sigma
    along_r = (b2 * jets.dr[:, 0] + b3 * jets.dr[:, 1]) / sigma
    grad_a = 1j * lam * b1 * a + phase * along_alpha
    return grad_a - 1j * kappa * a * along_r + op.q_tilde[:, sup] * a
