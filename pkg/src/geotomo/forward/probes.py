"""Boundary-term probe of the uniqueness argument along a tau ladder.

A CGO pair ``u1`` (decaying in ``x1``) and ``u2`` (growing) is built on the
extended cylinder for a matched-trace pair of conductivities, and restricted
to a box ``M`` of cylinder nodes. Along the ladder the probe measures

* the boundary term ``int gamma1 d_nu(u1~ - u2) u1 dS_g`` (must decay),
* ``int e^(-2 tau x1) |du|^2`` and ``int e^(-2 tau x1) |grad du|^2`` over the
  boundary, ``du = (e^(phi1/2) - e^(phi2/2)) u2``,
* ``int e^(-2 tau x1) |d_nu u|^2`` over ``dM_+,eps`` with
  ``u = e^(phi1/2) u1~ - e^(phi2/2) u2``.

``u2`` enters through its discrete extension with the same trace, so the
boundary term vanishes identically when the conductivities agree.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from collections.abc import Iterator, Sequence
from dataclasses import dataclass as std_dataclass
from dataclasses import replace
from typing import Any

# Third-party
import numpy as np

# Project/Local
from .._internal import get_logger, log_stage
from ..cgo import (
    CGOParams,
    CGOSolution,
    ExtendedCylinder,
    MollifiedFamily,
    build_cgo,
    bump_conductivity,
)
from ..constants import (
    DEFAULT_EPSILON,
    DEFAULT_ETA,
    DEFAULT_SEED,
    PROBE_HALF_WIDTH,
    PROBE_PROFILE_CENTER,
    PROBE_PROFILE_WIDTH,
    PROBE_RESOLUTION,
    PROBE_SLACK,
    PROBE_SPACING,
    PROBE_TAUS,
    PROBE_TRACE_TOLERANCE,
    PROBE_X1_POINTS,
    PROBE_X1_RANGE,
    ZERO_NORM_THRESHOLD,
)
from ..exceptions import ConfigError, DomainError, PreconditionError
from ..grids import BoxGrid, face_slices
from ..protocols import FloatArray
from ..rates import RateReport, check_ladder, rate_report
from ..ray_transform.pairing import AngularProfile
from .chart import BoxChart
from .solver import ConductivityField, DirichletSolver

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
PROBE_QUANTITIES = ("boundary_term", "trace_defect", "gradient_defect", "plus_flux")

_NODE_TOLERANCE = 1e-9


# =============================================================================
# CORE CLASSES
# =============================================================================
@std_dataclass(frozen=True)
class ProbeBox:
    """A box ``[x1_min, x1_max] x [-a, a]^2`` of CGO cylinder nodes.

    Attributes:
        cylinder: The extended cylinder carrying the CGOs.
        chart: Box chart with the cylinder metric ``e + g0``.
        index: Node block of the box inside the cylinder arrays.
    """

    cylinder: ExtendedCylinder
    chart: BoxChart
    index: tuple[slice, slice, slice]

    @classmethod
    def inside(
        cls, cylinder: ExtendedCylinder, half_width: float = PROBE_HALF_WIDTH
    ) -> ProbeBox:
        """The box whose faces lie on cylinder nodes.

        Raises:
            DomainError: If the box leaves M0.
            ValueError: If a face falls between nodes.
        """
        if half_width * np.sqrt(2.0) > cylinder.base.radius + _NODE_TOLERANCE:
            msg = (
                f"Probe box half width {half_width} leaves the disc of radius "
                f"{cylinder.base.radius}"
            )
            raise DomainError(msg)
        rows = _node_span(cylinder.x1, cylinder.x1_min, cylinder.x1_max)
        cols = _node_span(cylinder.xt, -half_width, half_width)
        n1, nt = rows.stop - rows.start, cols.stop - cols.start
        grid = BoxGrid(
            lower=(cylinder.x1_min, -half_width, -half_width),
            upper=(cylinder.x1_max, half_width, half_width),
            shape=(n1, nt, nt),
        )
        base = cylinder.base

        def metric(x: FloatArray) -> FloatArray:
            sigma = base.conformal_factor(np.asarray(x)[..., 1:])
            return np.stack([np.ones_like(sigma), sigma, sigma], axis=-1)

        chart = BoxChart(grid=grid, metric_fn=metric, name="probe")
        return cls(cylinder=cylinder, chart=chart, index=(rows, cols, cols))

    def restrict(self, field: Any) -> Any:
        return np.asarray(field)[self.index]


@std_dataclass(frozen=True)
class CGOPair:
    """Conductivity families and parameters of the two CGOs.

    Attributes:
        family1: Mollified family of ``gamma1`` on the cylinder.
        family2: Mollified family of ``gamma2`` on the cylinder.
        params1: Parameters of ``u1`` (sign +1, frequency and profile).
        params2: Parameters of ``u2`` (sign -1, ``lambda = 0``, ``b = 1``).
    """

    family1: MollifiedFamily
    family2: MollifiedFamily
    params1: CGOParams
    params2: CGOParams

    @classmethod
    def from_conductivities(
        cls,
        cylinder: ExtendedCylinder,
        gamma1: FloatArray,
        gamma2: FloatArray,
        lam: float = 0.0,
        profile: AngularProfile | None = None,
        eta: float = DEFAULT_ETA,
    ) -> CGOPair:
        calc = cylinder.calculus()
        tau = PROBE_TAUS[0]
        return cls(
            family1=MollifiedFamily(calc, gamma1, eta=eta),
            family2=MollifiedFamily(calc, gamma2, eta=eta),
            params1=CGOParams(tau=tau, lam=lam, profile=profile, eta=eta, sign=1),
            params2=CGOParams(tau=tau, eta=eta, sign=-1),
        )

    def build(
        self, cylinder: ExtendedCylinder, tau: float, seed: int = DEFAULT_SEED
    ) -> tuple[CGOSolution, CGOSolution]:
        first = build_cgo(
            replace(self.params1, tau=tau), self.family1, cylinder, seed=seed
        )
        second = build_cgo(
            replace(self.params2, tau=tau), self.family2, cylinder, seed=seed
        )
        return first, second


@std_dataclass(frozen=True)
class ProbeResult:
    """Probe values along the ladder and their rate fits."""

    taus: tuple[float, ...]
    values: dict[str, tuple[float, ...]]
    reports: list[RateReport]

    def rows(self) -> Iterator[dict[str, float]]:
        for k, tau in enumerate(self.taus):
            row = {"tau": tau}
            row.update({name: vals[k] for name, vals in self.values.items()})
            yield row


# =============================================================================
# PUBLIC API
# =============================================================================


def matched_pair(
    cylinder: ExtendedCylinder, amplitude: float = 0.2
) -> tuple[FloatArray, FloatArray]:
    """``gamma1`` and ``gamma2 = gamma1 (1 + bump)`` with interior supports.

    Both bumps sit at the middle of the x1 range of M; the supports keep six
    nodes away from the default probe box faces, so one-sided boundary
    stencils see identical conductivities. The contrast lies on rays from the
    polar center at angles within 0.12 of zero, outside :func:`probe_profile`.
    """
    box = cylinder.box
    middle = 0.5 * (cylinder.x1_min + cylinder.x1_max)
    gamma1 = bump_conductivity(box, (middle, 0.0, 0.0), 0.15, amplitude)
    extra = bump_conductivity(box, (middle + 0.02, 0.03, 0.0), 0.08, 0.5 * amplitude)
    return gamma1, gamma1 * extra


def probe_cylinder(
    n_x1: int = PROBE_X1_POINTS, spacing: float = PROBE_SPACING
) -> ExtendedCylinder:
    """Cylinder whose nodes contain the faces of the default probe box.

    M spans ``x1`` in ``[0, 1/2]``, which keeps the dynamic range ``e^tau``
    of the CGO pair within what the direct solver resolves.
    """
    return ExtendedCylinder(x1_range=PROBE_X1_RANGE, n_x1=n_x1, spacing=spacing)


def probe_profile() -> AngularProfile:
    """Angular profile of ``u1`` used by the probe."""
    return AngularProfile(center=PROBE_PROFILE_CENTER, width=PROBE_PROFILE_WIDTH)


def boundary_term_probe(
    box: ProbeBox,
    pair: CGOPair,
    epsilon: float = DEFAULT_EPSILON,
    taus: Sequence[float] = PROBE_TAUS,
    slack: float = PROBE_SLACK,
    seed: int = DEFAULT_SEED,
) -> ProbeResult:
    """Evaluate the boundary term and its ingredients along a tau ladder.

    Ladder points whose CGOs miss their weak residual bound are dropped with
    a warning. Each quantity counts as vanishing below ``1e-14`` times the
    same integral of the undifferenced CGO.

    Args:
        box: Probe box inside the CGO cylinder.
        pair: Conductivities and CGO parameters.
        epsilon: Threshold of ``dM_+,eps``.
        taus: Geometric ladder.
        slack: Slack of the rate fits.
        seed: Seed of the Neumann-series power iterations.

    Returns:
        The values and four rate reports: the boundary term must decay, the
        two trace quantities must meet ``-2 - 2 eta`` and ``-2 eta``, and the
        ``dM_+,eps`` quantity must stay bounded.

    Raises:
        PreconditionError: If the traces or normal derivatives of the two
            conductivities differ on the box boundary.
        ConfigError: If the ladder is not geometric with at least five
            points, or ``tau`` times the grid spacing exceeds the resolution
            limit at its top.
    """
    ladder = check_ladder(taus)
    cylinder = box.cylinder
    spacing = max(cylinder.h1, cylinder.h)
    if max(ladder) * spacing > PROBE_RESOLUTION * (1.0 + _NODE_TOLERANCE):
        msg = (
            f"Probe ladder top {max(ladder):.4g} is unresolved: tau * h = "
            f"{max(ladder) * spacing:.3g} exceeds {PROBE_RESOLUTION}"
        )
        raise ConfigError(msg)
    chart = box.chart
    gamma1 = ConductivityField(values=box.restrict(pair.family1.gamma))
    gamma2 = ConductivityField(values=box.restrict(pair.family2.gamma))
    _require_matched(chart, gamma1, gamma2)
    first = DirichletSolver(chart, gamma1)
    second = DirichletSolver(chart, gamma2)
    calc = chart.calculus()
    x1 = chart.grid.mesh()[0]
    log_stage(logger, "boundary_term_probe", taus=ladder, epsilon=epsilon)

    values: dict[str, list[float]] = {name: [] for name in PROBE_QUANTITIES}
    scales: dict[str, list[float]] = {name: [] for name in PROBE_QUANTITIES}
    used: list[float] = []
    for tau in ladder:
        sol1, sol2 = pair.build(cylinder, tau, seed)
        unresolved = [
            s for s in (sol1, sol2) if s.weak_residual > s.residual_bound
        ]
        if unresolved:
            logger.warning(
                "Dropping probe point tau=%.4g: weak residual %.3g above %.3g",
                tau,
                unresolved[0].weak_residual,
                unresolved[0].residual_bound,
            )
            continue
        tau_used = sol1.params.tau
        used.append(tau_used)
        u1 = box.restrict(sol1.u)
        v2 = box.restrict(sol2.u)
        f1 = chart.trace(u1)
        f2 = chart.trace(v2)
        u1_tilde = first.solve(f2)
        u2 = second.solve(f2)
        flux1 = first.flux(f2)
        term = np.sum((flux1 - second.flux(f2)) * f1)

        weight = np.exp(-2.0 * tau_used * x1)
        half1 = np.exp(0.5 * box.restrict(sol1.phi_tau))
        half2 = np.exp(0.5 * box.restrict(sol2.phi_tau))
        du = (half1 - half2) * v2
        u = half1 * u1_tilde - half2 * u2

        def face_value(field: Any) -> Any:
            def integrand(axis: int, side: int, index: tuple[Any, ...]) -> Any:
                return weight[index] * np.abs(field[index]) ** 2

            return float(calc.boundary_integral(integrand))

        def plus_flux(field: Any) -> float:
            def integrand(axis: int, side: int, index: tuple[Any, ...]) -> Any:
                dphi = (side if axis == 0 else 0.0) / np.sqrt(calc.metric[0][index])
                flux = np.abs(calc.normal_derivative(field, axis, side, index)) ** 2
                return np.where(dphi >= epsilon, weight[index] * flux, 0.0)

            return float(calc.boundary_integral(integrand))

        values["boundary_term"].append(float(abs(term)))
        values["trace_defect"].append(face_value(du))
        values["gradient_defect"].append(face_value(np.sqrt(calc.grad_norm2(du))))
        values["plus_flux"].append(plus_flux(u))
        scales["boundary_term"].append(float(abs(np.sum(flux1 * f1))))
        scales["trace_defect"].append(face_value(v2))
        scales["gradient_defect"].append(face_value(np.sqrt(calc.grad_norm2(v2))))
        scales["plus_flux"].append(plus_flux(half2 * u2))
        logger.info(
            "Probe at tau=%.4g: boundary term=%.3e, plus_flux=%.3e",
            tau_used,
            values["boundary_term"][-1],
            values["plus_flux"][-1],
        )

    eta = pair.params2.eta
    targets = {
        "boundary_term": (0.0, 0.0),
        "trace_defect": (-2.0 - 2.0 * eta, slack),
        "gradient_defect": (-2.0 * eta, slack),
        "plus_flux": (0.0, slack),
    }
    reports = [
        rate_report(
            f"probe.{name}",
            used,
            values[name],
            target,
            quantity_slack,
            require_monotone=False,
            floor=ZERO_NORM_THRESHOLD * max(scales[name], default=0.0),
        )
        for name, (target, quantity_slack) in targets.items()
    ]
    return ProbeResult(
        taus=tuple(used),
        values={name: tuple(v) for name, v in values.items()},
        reports=reports,
    )


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _node_span(nodes: FloatArray, lower: float, upper: float) -> slice:
    start = int(np.argmin(np.abs(nodes - lower)))
    stop = int(np.argmin(np.abs(nodes - upper))) + 1
    spacing = float(nodes[1] - nodes[0])
    tol = _NODE_TOLERANCE + 1e-6 * spacing
    if abs(nodes[start] - lower) > tol or abs(nodes[stop - 1] - upper) > tol:
        msg = f"Box faces {lower}, {upper} do not fall on grid nodes"
        raise ValueError(msg)
    return slice(start, stop)


def _require_matched(
    chart: BoxChart, gamma1: ConductivityField, gamma2: ConductivityField
) -> None:
    """Traces and normal derivatives of the conductivities must agree."""
    calc = chart.calculus()
    diff = gamma1.values - gamma2.values
    scale = float(np.abs(gamma1.values).max())
    worst = float(np.abs(chart.trace(diff)).max())
    for axis, side, index in face_slices(chart.dim):
        normal = calc.normal_derivative(diff, axis, side, index)
        worst = max(worst, float(np.abs(normal).max()))
    if worst > PROBE_TRACE_TOLERANCE * scale:
        msg = (
            f"Conductivities differ to first order on the boundary "
            f"(defect {worst:.3e})"
        )
        raise PreconditionError(msg)
