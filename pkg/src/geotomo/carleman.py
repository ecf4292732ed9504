"""Numerical evaluation of the boundary Carleman estimate for ``phi = x1``.

Every term is evaluated on a ``DiagonalCalculus`` whose first metric
component is one (``g = e + g0``). The right-hand side is computed in
conjugated form, ``e^{-tau x1} L e^{tau x1} v = (-Delta_g - tau^2) v
- 2 tau d1 v + <A, grad v> + tau A^1 v + q v``, so no exponential weights are
ever formed.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import itertools
from collections.abc import Sequence
from dataclasses import dataclass as std_dataclass
from typing import Any

# Third-party
import numpy as np
from pydantic import Field
from pydantic.dataclasses import dataclass

# Project/Local
from ._internal import get_logger, log_stage
from ._internal.parallel import map_chunks
from .constants import (
    CARLEMAN_C,
    CARLEMAN_C_DOUBLE_PRIME,
    CARLEMAN_C_PRIME,
    CARLEMAN_FAMILY_SIZE,
    CARLEMAN_SLACK_TOLERANCE,
    DEFAULT_EPSILON,
    DEFAULT_SEED,
)
from .exceptions import ConfigError, DomainError
from .grids import BoxGrid, DiagonalCalculus

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
BOUNDARY_TERMS = ("trace", "flux", "cross", "gradient", "cubic")

# Holds the frozen (C', C'') so they can always be recovered
DEFAULT_CANDIDATES = (0.0625, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)

# Relative tolerance on the divergence identity at the reference grid
DIVERGENCE_TOLERANCE = 1e-4


# =============================================================================
# CORE CLASSES
# =============================================================================


@dataclass(frozen=True)
class CarlemanConstants:
    """``(C, C', C'')`` of the estimate."""

    c: float = Field(default=CARLEMAN_C, gt=0.0)
    c_prime: float = Field(default=CARLEMAN_C_PRIME, ge=0.0)
    c_double_prime: float = Field(default=CARLEMAN_C_DOUBLE_PRIME, ge=0.0)


@dataclass(frozen=True)
class CarlemanReport:
    """Every term of the estimate at one ``tau``.

    Attributes:
        tau: Carleman parameter.
        interior_lhs: ``C (tau^2 ||v||^2 + ||grad v||^2)``.
        boundary_terms: The five signed boundary contributions.
        rhs: ``||e^{-tau x1} L (e^{tau x1} v)||^2``.
        slack: ``rhs`` minus the assembled left side.
        scale: Magnitude used to judge ``slack``.
        smallness: ``||A||_inf^2 + tau^-2 ||q||_inf^2``.
        passed: Whether ``slack >= -tolerance * scale``.
    """

    tau: float
    interior_lhs: float
    boundary_terms: dict[str, float]
    rhs: float
    slack: float
    scale: float
    smallness: float = 0.0
    passed: bool = True

    @property
    def lhs(self) -> float:
        return self.interior_lhs + sum(self.boundary_terms.values())

    def as_row(self) -> dict[str, object]:
        return {
            "tau": self.tau,
            "interior_lhs": self.interior_lhs,
            **{name: self.boundary_terms[name] for name in BOUNDARY_TERMS},
            "rhs": self.rhs,
            "slack": self.slack,
            "pass": self.passed,
        }


@std_dataclass(frozen=True)
class DivergenceCheck:
    """Three routes to ``4 tau Re int (Delta + tau^2) v d1 conj(v)``.

    Attributes:
        vol: Volume integral of the divergence of the flux field.
        surf: Flux through the boundary.
        left: The volume integral evaluated directly.
        scale: ``tau^3 ||v||^2 + tau ||grad v||^2``.
        rel_err: Largest route disagreement over ``scale``.
    """

    vol: float
    surf: float
    left: float
    scale: float
    rel_err: float


@std_dataclass(frozen=True)
class _Terms:
    """Unweighted integrals from which any constants assemble a report."""

    tau: float
    mass: float
    energy: float
    trace: float
    flux: float
    cross: float
    gradient: float
    cubic: float
    rhs: float
    smallness: float

    def report(
        self, constants: CarlemanConstants, tolerance: float
    ) -> CarlemanReport:
        interior = constants.c * (self.tau**2 * self.mass + self.energy)
        boundary = {
            "trace": -constants.c_prime * self.tau**2 * self.trace,
            "flux": -constants.c_double_prime * self.flux,
            "cross": self.cross,
            "gradient": self.gradient,
            "cubic": self.cubic,
        }
        lhs = interior + sum(boundary.values())
        slack = self.rhs - lhs
        scale = max(self.rhs, interior + sum(abs(b) for b in boundary.values()))
        return CarlemanReport(
            tau=self.tau,
            interior_lhs=interior,
            boundary_terms=boundary,
            rhs=self.rhs,
            slack=slack,
            scale=scale,
            smallness=self.smallness,
            passed=slack >= -tolerance * scale,
        )


# =============================================================================
# PUBLIC API
# =============================================================================


def segment_grid(shape: Sequence[int] = (33, 17, 17)) -> BoxGrid:
    """The box ``[0, 1] x [-1/2, 1/2]^(n-1)``."""
    dim = len(shape)
    return BoxGrid(
        lower=(0.0,) + (-0.5,) * (dim - 1),
        upper=(1.0,) + (0.5,) * (dim - 1),
        shape=tuple(shape),
    )


def divergence_identity_check(
    calc: DiagonalCalculus, v: Any, tau: float
) -> DivergenceCheck:
    """Compare the volume and surface forms of the Carleman divergence identity.

    The flux field is
    ``4 tau Re(d1 conj(v) grad v) - 2 tau grad(x1) |grad v|^2
    + 2 tau^3 grad(x1) |v|^2``.

    Examples:
        >>> grid = segment_grid((17, 9))
        >>> calc = DiagonalCalculus.euclidean(grid)
        >>> x1, _ = grid.mesh()
        >>> check = divergence_identity_check(calc, x1, 1.0)
        >>> round(check.vol, 8), round(check.surf, 8)
        (2.0, 2.0)
    """
    _require_product(calc)
    v = np.asarray(v)
    d1 = calc.partial(v, 0)
    grad = calc.gradient(v)
    grad2 = calc.grad_norm2(v)
    mass = np.abs(v) ** 2
    flux = [4.0 * tau * np.real(np.conj(d1) * g) for g in grad]
    flux[0] = flux[0] - 2.0 * tau * grad2 + 2.0 * tau**3 * mass

    vol = float(np.real(calc.integrate(calc.divergence(flux))))
    surf = float(
        np.real(
            calc.boundary_integral(
                lambda axis, side, index: calc.normal_component(
                    flux, axis, side, index
                )
            )
        )
    )
    shifted = calc.laplacian(v) + tau**2 * v
    left = float(4.0 * tau * np.real(calc.integrate(shifted * np.conj(d1))))
    scale = tau**3 * float(calc.integrate(mass)) + tau * float(calc.integrate(grad2))
    rel = max(abs(vol - surf), abs(left - surf)) / max(scale, 1e-300)
    log_stage(logger, "divergence_identity", tau=tau, rel_err=rel)
    return DivergenceCheck(vol=vol, surf=surf, left=left, scale=scale, rel_err=rel)


def divergence_refinement_order(
    grid: BoxGrid, v_fn: Any, tau: float, levels: int = 3
) -> tuple[list[float], float]:
    """Errors of the divergence identity on successively refined grids.

    ``v_fn(*mesh)`` samples the test function. Returns the per-level relative
    errors and the mean observed order ``log2(e_k / e_{k+1})``.
    """
    errors: list[float] = []
    current = grid
    for _ in range(levels):
        calc = DiagonalCalculus.euclidean(current)
        check = divergence_identity_check(calc, v_fn(*current.mesh()), tau)
        errors.append(check.rel_err)
        current = current.refined()
    e = np.maximum(np.asarray(errors), 1e-300)
    return errors, float(np.mean(np.log2(e[:-1] / e[1:])))


def estimate_check(
    calc: DiagonalCalculus,
    v: Any,
    tau: float,
    a: Sequence[Any] | None = None,
    q: Any = None,
    constants: CarlemanConstants | None = None,
    tolerance: float = CARLEMAN_SLACK_TOLERANCE,
) -> CarlemanReport:
    """Assemble both sides of the Carleman estimate for ``v`` at ``tau``.

    With ``a`` and ``q`` omitted this is the estimate for ``-Delta_g`` alone.

    Args:
        calc: Calculus on the box (first metric component one).
        v: Test function on the grid.
        tau: Carleman parameter.
        a: Contravariant components of the drift ``A``.
        q: Potential.
        constants: ``(C, C', C'')``; the calibrated defaults when omitted.
        tolerance: Relative tolerance on a negative slack.

    Returns:
        The report; nothing is raised on a violation.
    """
    constants = constants or CarlemanConstants()
    terms = _terms(calc, np.asarray(v), tau, a, q)
    report = terms.report(constants, tolerance)
    if not report.passed:
        logger.warning(
            "Carleman estimate violated at tau=%.4g (slack %.3g)", tau, report.slack
        )
    return report


def carleman_reports(
    calc: DiagonalCalculus,
    family: Sequence[Any],
    taus: Sequence[float],
    constants: CarlemanConstants | None = None,
    tolerance: float = CARLEMAN_SLACK_TOLERANCE,
) -> list[CarlemanReport]:
    """Reports for every family member at every ladder point."""
    constants = constants or CarlemanConstants()
    pairs = list(itertools.product(range(len(family)), taus))
    log_stage(logger, "carleman_reports", members=len(family), taus=tuple(taus))
    terms = map_chunks(lambda p: _terms(calc, family[p[0]], p[1], None, None), pairs)
    return [t.report(constants, tolerance) for t in terms]


def calibrate_constants(
    calc: DiagonalCalculus,
    family: Sequence[Any],
    taus: Sequence[float],
    c: float = CARLEMAN_C,
    candidates: Sequence[float] = DEFAULT_CANDIDATES,
    tolerance: float = CARLEMAN_SLACK_TOLERANCE,
) -> CarlemanConstants:
    """Smallest ``(C', C'')`` candidate pair with no violation over the family.

    Pairs are tried by increasing ``C' + C''`` (then ``C'``).

    Raises:
        ConfigError: If every candidate pair is violated somewhere.
    """
    pairs = list(itertools.product(range(len(family)), taus))
    terms = map_chunks(lambda p: _terms(calc, family[p[0]], p[1], None, None), pairs)
    ordered = sorted(
        itertools.product(candidates, candidates), key=lambda cc: (sum(cc), cc[0])
    )
    for c_prime, c_double_prime in ordered:
        constants = CarlemanConstants(
            c=c, c_prime=c_prime, c_double_prime=c_double_prime
        )
        if all(t.report(constants, tolerance).passed for t in terms):
            logger.info("Calibrated C'=%.4g, C''=%.4g", c_prime, c_double_prime)
            return constants
    msg = f"No candidate pair from {tuple(candidates)} satisfies the estimate"
    raise ConfigError(msg)


def carleman_family(
    grid: BoxGrid, size: int = CARLEMAN_FAMILY_SIZE, seed: int = DEFAULT_SEED
) -> list[Any]:
    """Frozen test family of smooth complex functions on ``grid``.

    Even members are compactly supported in the interior; odd members are
    bumps centered on a face, so they carry boundary mass.
    """
    rng = np.random.default_rng(seed)
    mesh = grid.mesh()
    lower = np.asarray(grid.lower)
    upper = np.asarray(grid.upper)
    extent = upper - lower
    members: list[Any] = []
    for k in range(size):
        width = float(rng.uniform(0.25, 0.4)) * float(extent.min())
        if k % 2 == 0:
            center = rng.uniform(lower + width, upper - width)
        else:
            center = rng.uniform(lower + 0.5 * width, upper - 0.5 * width)
            axis = int(rng.integers(grid.dim))
            center[axis] = upper[axis] if rng.random() < 0.5 else lower[axis]
        freq = rng.uniform(-3.0, 3.0, grid.dim)
        s2 = sum((m - c) ** 2 for m, c in zip(mesh, center, strict=True)) / width**2
        bump = np.where(s2 < 1.0, (1.0 - np.minimum(s2, 1.0)) ** 4, 0.0)
        phase = np.exp(1j * sum(f * m for f, m in zip(freq, mesh, strict=True)))
        members.append(bump * phase)
    return members


def boundary_dominance_ratio(
    calc: DiagonalCalculus,
    v: Any,
    tau: float,
    epsilon: float = DEFAULT_EPSILON,
    c_prime: float = CARLEMAN_C_PRIME,
) -> float:
    """``2 tau^3 int d_nu(x1) |v|^2`` over ``C' tau^2 int |v|^2`` on the
    boundary part where ``d_nu(x1) > epsilon``.

    Raises:
        DomainError: If ``v`` has no mass there.
    """
    _require_product(calc)
    mass = np.abs(np.asarray(v)) ** 2
    e1 = [np.ones(calc.grid.shape)] + [
        np.zeros(calc.grid.shape) for _ in range(calc.grid.dim - 1)
    ]

    def weighted(power: int) -> Any:
        def face(axis: int, side: int, index: tuple[Any, ...]) -> Any:
            normal = calc.normal_component(e1, axis, side, index)
            on = normal > epsilon
            return np.where(on, normal**power * mass[index], 0.0)

        return calc.boundary_integral(face)

    cubic = 2.0 * tau**3 * float(weighted(1))
    trace = c_prime * tau**2 * float(weighted(0))
    if trace <= 0.0:
        msg = "Test function has no mass on the epsilon-positive boundary"
        raise DomainError(msg)
    return cubic / trace


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _require_product(calc: DiagonalCalculus) -> None:
    if not np.allclose(calc.metric[0], 1.0):
        msg = "The x1 metric component must be one"
        raise DomainError(msg)


def _terms(
    calc: DiagonalCalculus,
    v: Any,
    tau: float,
    a: Sequence[Any] | None,
    q: Any,
) -> _Terms:
    _require_product(calc)
    v = np.asarray(v)
    d1 = calc.partial(v, 0)
    grad2 = calc.grad_norm2(v)
    mass = np.abs(v) ** 2

    conj = -calc.laplacian(v) - tau**2 * v - 2.0 * tau * d1
    smallness = 0.0
    if a is not None:
        partials = calc.partials(v)
        conj = conj + sum(c * d for c, d in zip(a, partials, strict=True))
        conj = conj + tau * a[0] * v
        a_norm2 = calc.dot(list(a), list(a))
        smallness += float(np.max(np.abs(a_norm2)))
    if q is not None:
        conj = conj + q * v
        smallness += float(np.max(np.abs(q))) ** 2 / tau**2

    def trace_face(axis: int, side: int, index: tuple[Any, ...]) -> Any:
        return mass[index]

    def flux_face(axis: int, side: int, index: tuple[Any, ...]) -> Any:
        d_nu = calc.normal_derivative(v, axis, side, index)
        return np.real(np.conj(v[index]) * d_nu)

    def cross_face(axis: int, side: int, index: tuple[Any, ...]) -> Any:
        d_nu = calc.normal_derivative(v, axis, side, index)
        return np.real(d_nu * np.conj(d1[index]))

    def weighted_face(field: Any) -> Any:
        def face(axis: int, side: int, index: tuple[Any, ...]) -> Any:
            return calc.normal_component(e1, axis, side, index) * field[index]

        return face

    e1 = [np.ones(v.shape)] + [np.zeros(v.shape)] * (calc.grid.dim - 1)

    return _Terms(
        tau=float(tau),
        mass=float(calc.integrate(mass)),
        energy=float(calc.integrate(grad2)),
        trace=float(calc.boundary_integral(trace_face)),
        flux=float(calc.boundary_integral(flux_face)),
        cross=4.0 * tau * float(calc.boundary_integral(cross_face)),
        gradient=-2.0 * tau * float(calc.boundary_integral(weighted_face(grad2))),
        cubic=2.0 * tau**3 * float(calc.boundary_integral(weighted_face(mass))),
        rhs=float(calc.integrate(np.abs(conj) ** 2)),
        smallness=smallness,
    )
