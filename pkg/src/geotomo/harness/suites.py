"""Experiment suites and the runner that turns them into report files.

Each suite takes a :class:`~geotomo.context.SuiteContext` and an
:class:`~geotomo.harness.config.ExperimentConfig`, records named checks and
rate reports, and writes CSV artifacts when the context has an output
directory. ``run_suite`` adds the ``<suite>.json`` report and the exit status.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import math
import time
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import asdict
from dataclasses import dataclass as std_dataclass
from pathlib import Path
from typing import Any

# Third-party
import numpy as np

# Project/Local
from .._internal import get_logger, write_csv, write_json
from ..carleman import (
    DEFAULT_CANDIDATES,
    CarlemanConstants,
    boundary_dominance_ratio,
    calibrate_constants,
    carleman_family,
    carleman_reports,
    divergence_identity_check,
    divergence_refinement_order,
    segment_grid,
)
from ..cgo import (
    CUSP_BASE_EXPONENT,
    CGOParams,
    ExtendedCylinder,
    MollifiedFamily,
    ShiftedInverse,
    build_cgo,
    bump_conductivity,
    cgo_rate_reports,
    cusp_conductivity,
    family_rate_reports,
    g0_norm_ladder,
    solve_with_retry,
)
from ..constants import EXIT_FAILURE, EXIT_OK
from ..context import SuiteContext
from ..enums import Suite, X1Closure
from ..exceptions import (
    ConfigError,
    ExceptionalTauError,
    GeotomoError,
    NonconvergenceError,
    PreconditionError,
)
from ..forward import (
    BoxChart,
    CGOPair,
    ConductivityField,
    PointDomain,
    ProbeBox,
    alessandrini_refinement,
    boundary_term_probe,
    conformal_reduction_check,
    dn_map,
    log_quotient_pde_residual,
    logpolar_map,
    matched_pair,
    probe_cylinder,
    probe_profile,
    smooth_bump,
)
from ..geometry import (
    AdmissibleCylinder,
    ConformalDisc,
    PhaseState,
    exp_map,
    gauss_lemma_defect,
    geodesic_trace,
    polar_coords,
    simplicity_check,
    step_order,
    time_reversal_check,
    unit_speed_drift,
)
from ..grids import BoxGrid, DiagonalCalculus
from ..rates import RateReport
from ..ray_transform import (
    AngularProfile,
    FieldGrid,
    RayTransform,
    attenuation_scan,
    bump_family,
    fourier_x1_pairing_check,
    pairing_test,
    reconstruct,
)
from ..sphere_bundle import build_bundle_quadrature, build_influx, santalo_check
from .config import ExperimentConfig, with_environment
from .plots import rate_columns, rate_plot_script

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
SuiteFn = Callable[[SuiteContext, ExperimentConfig], None]

# Fine geodesic step for closed-form chord and reversal checks
_FINE_STEP_DIVISOR = 4.0
_POLAR_SAMPLES = 20
_UNIT_SPEED_TOLERANCE = 1e-9
_ZERO_TOLERANCE = 1e-12


@std_dataclass(frozen=True)
class SuiteRun:
    """Outcome of :func:`run_suite`.

    Attributes:
        suite: The suite that ran.
        exit_code: ``EXIT_OK`` iff every check passed.
        report: The JSON payload.
        report_path: Where the payload was written.
        failures: Names of the failed checks.
    """

    suite: Suite
    exit_code: int
    report: dict[str, Any]
    report_path: Path
    failures: list[str]


# =============================================================================
# SUITES
# =============================================================================


def geometry_suite(ctx: SuiteContext, config: ExperimentConfig) -> None:
    """Simplicity, geodesic flow and polar normal coordinates of the chart."""
    chart = config.chart.build()
    tol = config.tolerances.geometry
    fine = config.ray.step / _FINE_STEP_DIVISOR

    report = simplicity_check(chart, config.ray.n_boundary, config.ray.step)
    ctx.check_true("geometry.simplicity", report.passed)
    closed = report.closed_form_curvature
    if closed is not None:
        ctx.check_close(
            "geometry.boundary_curvature",
            report.min_second_fundamental_form,
            closed,
            tol * max(1.0, abs(closed)),
        )

    rho = chart.radius
    start = PhaseState.unit(chart, [-rho, 0.0], [1.0, 0.0])
    diameter = geodesic_trace(chart, start, fine)
    ctx.check_close(
        "geometry.diameter_exit_time", diameter.exit_time, _diameter(chart), tol
    )

    thetas = 2.0 * math.pi * np.arange(config.ray.n_angles) / config.ray.n_angles
    base = chart.boundary_point(thetas)
    turn = 0.3 * np.cos(3.0 * thetas)
    inward = -base / rho
    dirs = np.stack(
        [
            np.cos(turn) * inward[:, 0] - np.sin(turn) * inward[:, 1],
            np.sin(turn) * inward[:, 0] + np.cos(turn) * inward[:, 1],
        ],
        axis=-1,
    )
    ctx.check_le(
        "geometry.time_reversal", time_reversal_check(chart, base, dirs, fine), 1e-7
    )

    first = PhaseState.unit(chart, base[0], dirs[0])
    trace = geodesic_trace(chart, first, config.ray.step)
    ctx.check_le(
        "geometry.unit_speed", unit_speed_drift(chart, trace), _UNIT_SPEED_TOLERANCE
    )
    _write(
        ctx, "geodesic_trace", _columns(trace.as_rows()), {"chart": str(chart.kind)}
    )

    if chart.curvature != 0.0:
        order = step_order(chart, [-0.5 * rho, 0.1 * rho], [1.0, 0.3])
        ctx.check_ge("geometry.rk4_order", order, 3.5)

    omega = (-(rho + 0.6 * chart.margin), 0.0)
    rng = np.random.default_rng(config.seed)
    radius = 0.9 * rho * np.sqrt(rng.uniform(size=_POLAR_SAMPLES))
    angle = rng.uniform(0.0, 2.0 * math.pi, _POLAR_SAMPLES)
    points = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=-1)
    polar = polar_coords(chart, omega, points)
    back = exp_map(chart, omega, polar.r, polar.theta)
    ctx.check_le(
        "geometry.polar_round_trip", float(np.abs(back - points).max()), 1e-6
    )
    defect = gauss_lemma_defect(chart, omega, polar.r, polar.theta)
    ctx.check_le("geometry.gauss_lemma", float(defect.max()), 1e-6)


def santalo_suite(ctx: SuiteContext, config: ExperimentConfig) -> None:
    """Santalo's formula for a constant and two smooth bundle integrands."""
    chart = config.chart.build()
    ray = config.ray
    tol = config.tolerances.santalo
    quad = build_bundle_quadrature(
        chart, ray.n_boundary, ray.n_angles, ray.n_radial, ray.n_directions
    )
    ones = santalo_check(chart, lambda x, _xi: np.ones(len(x)), quad, ray.step)
    ctx.check_le("santalo.constant", ones.rel_err, tol)
    closed = 2.0 * math.pi * chart.area()
    ctx.check_le("santalo.constant_closed_form", abs(ones.rhs - closed) / closed, tol)

    fields: dict[str, Callable[[Any, Any], Any]] = {
        "gaussian": lambda x, _xi: np.exp(-np.sum(x**2, axis=-1)),
        "directional": lambda x, xi: (1.0 + 0.5 * x[..., 0] * xi[..., 1]) ** 2,
    }
    for name, field in fields.items():
        result = santalo_check(chart, field, quad, ray.step)
        ctx.check_le(f"santalo.{name}", result.rel_err, tol)
    _write(ctx, "influx", _columns(quad.influx.as_rows()), {"chart": str(chart.kind)})


def raytransform_suite(ctx: SuiteContext, config: ExperimentConfig) -> None:
    """Adjointness, inversion, attenuation scan and the polar pairings."""
    chart = config.chart.build()
    ray = config.ray
    tol = config.tolerances
    influx = build_influx(chart, ray.n_boundary, ray.n_angles)
    field_grid = FieldGrid.for_chart(chart, config.grid.field_points)
    transform = RayTransform(field_grid, influx, ray.step)
    family = bump_family(chart.radius, ray.family_size, config.seed)
    rng = np.random.default_rng(config.seed)

    for lam in ray.lambdas:
        worst = 0.0
        for _ in range(ray.n_pairs):
            bump = family[int(rng.integers(len(family)))]
            f = field_grid.sample(bump)
            center, freq = rng.uniform(0.0, 2.0 * math.pi), int(rng.integers(1, 4))
            h = (1.0 + 0.5 * np.cos(freq * influx.theta - center)) * np.cos(
                influx.alpha
            ) ** 2
            # exact ray integrals on one side, traced footprints on the other
            left = influx.inner(transform.forward(bump, lam), h)
            right = field_grid.inner(f, transform.adjoint(h, lam, ray.n_directions))
            h_norm = math.sqrt(float(np.real(influx.inner(h, h))))
            scale = field_grid.norm(f) * h_norm
            worst = max(worst, float(abs(left - right)) / scale)
        ctx.check_le(f"raytransform.adjoint[lam={lam:g}]", worst, tol.adjoint)

        normal = transform.normal(lam)
        f, g = (field_grid.sample(b) for b in family[:2])
        gap = abs(normal.inner(normal(f), g) - normal.inner(f, normal(g)))
        ctx.check_le(
            f"raytransform.normal_symmetry[lam={lam:g}]",
            gap / (field_grid.norm(f) * field_grid.norm(g)),
            tol.route,
        )

    errors: dict[float, float] = {}
    for lam in ray.lambdas:
        worst = max(_reconstruction_error(transform, bump, lam) for bump in family)
        errors[lam] = worst
        ctx.check_le(
            f"raytransform.reconstruction[lam={lam:g}]", worst, tol.reconstruction
        )

    scale = config.grid.refined_points / config.grid.field_points
    refined = RayTransform(
        FieldGrid.for_chart(chart, config.grid.refined_points),
        build_influx(
            chart, round(ray.n_boundary * scale), round(ray.n_angles * scale)
        ),
        ray.step,
    )
    fine_error = max(_reconstruction_error(refined, bump, 0.0) for bump in family)
    coarse_error = errors.get(0.0, max(errors.values()))
    ctx.record(
        "raytransform.refinement",
        fine_error,
        coarse_error,
        None,
        fine_error <= coarse_error,
    )

    scan = attenuation_scan(
        transform,
        family[: min(3, len(family))],
        ray.scan_lambdas,
        error_tolerance=tol.reconstruction,
    )
    ctx.check_ge(
        "raytransform.largest_stable_lambda", scan.largest_stable, ray.lambda_max
    )
    _write(
        ctx,
        "attenuation_scan",
        {
            "lambda": list(scan.lambdas),
            "error": [min(e, 1e300) for e in scan.errors],
            "succeeded": list(scan.succeeded),
        },
        {"field_points": config.grid.field_points},
    )

    omega = (-(chart.radius + 0.6 * chart.margin), 0.0)
    profile = AngularProfile(center=0.0, width=0.5)
    for lam in (0.0, ray.lambda_max):
        pairing = pairing_test(
            field_grid, family[0], omega, lam, profile, step=ray.step
        )
        ctx.check_le(
            f"raytransform.pairing[lam={lam:g}]", pairing.rel_diff, tol.pairing
        )

    bump = family[0]

    def slab(x1: Any, x: Any) -> Any:
        return np.sin(math.pi * np.asarray(x1)) ** 4 * bump(x)

    fourier = fourier_x1_pairing_check(
        field_grid, slab, omega, ray.lambda_max, profile, step=ray.step
    )
    ctx.check_le("raytransform.fourier_x1_pairing", fourier.rel_diff, tol.pairing)


def mollify_suite(ctx: SuiteContext, config: ExperimentConfig) -> None:
    """Mollification rates on the cusp conductivity family."""
    cgo = config.cgo
    grid = BoxGrid.cube(-1.0, 1.0, cgo.mollify_points, 2)
    gamma = cusp_conductivity(
        grid, (0.0, 0.0), support=0.8, exponent=CUSP_BASE_EXPONENT + cgo.eta_prime
    )
    family = MollifiedFamily(
        DiagonalCalculus.euclidean(grid),
        gamma,
        eta=cgo.eta,
        exponent=cgo.mollifier_exponent,
    )
    reports = family_rate_reports(
        family, cgo.mollify_taus, config.tolerances.rate_slack
    )
    _emit_rates(ctx, "mollify_rates", reports)


def g0_suite(ctx: SuiteContext, config: ExperimentConfig) -> None:
    """Norm scaling of the shifted inverse and exceptional-tau handling."""
    cgo = config.cgo
    cylinder = ExtendedCylinder(n_x1=cgo.n_x1, spacing=cgo.spacing)
    _emit_rates(ctx, "g0_norms", g0_norm_ladder(cylinder, cgo.g0_taus))

    inverse = ShiftedInverse(cylinder, cgo.g0_taus[0], cgo.tau_min)
    rng = np.random.default_rng(config.seed)
    noise = rng.standard_normal((2, *cylinder.shape))
    rhs = cylinder.restrict(noise[0] + 1j * noise[1])
    w = inverse(rhs)
    residual = cylinder.norm(inverse.operator(w) - rhs) / cylinder.norm(rhs)
    ctx.check_le("g0.operator_residual", residual, 1e-6)

    periodic = ExtendedCylinder(
        n_x1=cgo.n_x1, spacing=cgo.spacing, closure=X1Closure.PERIODIC
    )
    roots = np.sqrt(np.clip(periodic.basis.eigenvalues, 0.0, None))
    exceptional = float(roots[roots >= cgo.tau_min][0])
    try:
        ShiftedInverse(periodic, exceptional, cgo.tau_min)
    except ExceptionalTauError:
        detected = True
    else:
        detected = False
    ctx.check_true("g0.exceptional_detected", detected)
    _, used = solve_with_retry(
        lambda t: ShiftedInverse(periodic, t, cgo.tau_min), exceptional
    )
    ctx.record("g0.exceptional_retry", used, exceptional, None, used > exceptional)


def cgo_suite(ctx: SuiteContext, config: ExperimentConfig) -> None:
    """Remainder decay and the assembled CGO for a smooth conductivity."""
    cgo = config.cgo
    cylinder = ExtendedCylinder(n_x1=cgo.n_x1, spacing=cgo.spacing)
    gamma = bump_conductivity(cylinder.box, (0.5, 0.0, 0.0), 0.2, amplitude=0.2)
    family = MollifiedFamily(
        cylinder.calculus(), gamma, eta=cgo.eta, exponent=cgo.mollifier_exponent
    )
    params = CGOParams(
        tau=cgo.taus[0], lam=cgo.lam, eta=cgo.eta, sign=1, tau_min=cgo.tau_min
    )
    reports = cgo_rate_reports(
        params, family, cylinder, cgo.taus, config.tolerances.rate_slack
    )
    _emit_rates(ctx, "cgo_rates", reports)

    for sign in (1, -1):
        label = "u1" if sign == 1 else "u2"
        solution = build_cgo(
            CGOParams(
                tau=cgo.taus[0],
                lam=cgo.lam if sign == 1 else 0.0,
                eta=cgo.eta,
                sign=sign,
                tau_min=cgo.tau_min,
            ),
            family,
            cylinder,
            seed=config.seed,
        )
        ctx.check_le(
            f"cgo.{label}.weak_residual",
            solution.weak_residual,
            solution.residual_bound,
        )
        ctx.check_le(
            f"cgo.{label}.eikonal",
            float(np.abs(solution.eikonal).max()),
            config.tolerances.eikonal,
        )
        gap, remainder = solution.envelope_defect()
        ctx.record(
            f"cgo.{label}.envelope",
            gap,
            remainder,
            None,
            gap <= remainder * (1.0 + 1e-9) + _ZERO_TOLERANCE,
        )
        _write(
            ctx,
            f"cgo_{label}",
            _columns(solution.rows()),
            {"tau": solution.params.tau, "sign": sign},
        )


def carleman_suite(ctx: SuiteContext, config: ExperimentConfig) -> None:
    """Divergence identity, the estimate over the family and boundary dominance."""
    carleman = config.carleman
    tol = config.tolerances
    grid = segment_grid(carleman.shape)
    calc = DiagonalCalculus.euclidean(grid)
    family = carleman_family(grid, carleman.family_size, config.seed)
    tau0 = carleman.taus[0]

    def smooth(x1: Any, x2: Any, x3: Any) -> Any:
        return np.exp(0.5 * x1 + 1j * x2) * np.cos(x3)

    resolved = smooth(*grid.mesh())
    worst = max(
        divergence_identity_check(calc, resolved, tau).rel_err
        for tau in carleman.identity_taus
    )
    ctx.check_le("carleman.divergence_identity", worst, tol.divergence)

    _, order = divergence_refinement_order(
        segment_grid(carleman.refinement_shape), smooth, tau0
    )
    ctx.check_ge("carleman.refinement_order", order, tol.refinement_order)

    constants = CarlemanConstants(
        c=carleman.c,
        c_prime=carleman.c_prime,
        c_double_prime=carleman.c_double_prime,
    )
    reports = carleman_reports(calc, family, carleman.taus, constants)
    violations = sum(not r.passed for r in reports)
    ctx.check_le("carleman.violations", float(violations), 0.0)
    rows = [
        {"member": k // len(carleman.taus), **r.as_row()} for k, r in enumerate(reports)
    ]
    _write(ctx, "carleman_estimate", _columns(rows), asdict(constants))

    candidates = sorted(
        {*DEFAULT_CANDIDATES, carleman.c_prime, carleman.c_double_prime}
    )
    calibrated = calibrate_constants(
        calc, family, carleman.taus, carleman.c, candidates
    )
    ctx.check_le(
        "carleman.calibrated_constants",
        calibrated.c_prime + calibrated.c_double_prime,
        carleman.c_prime + carleman.c_double_prime,
    )

    x1, x2, x3 = grid.mesh()
    edge = np.exp(-((x1 - 1.0) ** 2) / (2.0 * 0.05**2)) * np.exp(
        -(x2**2 + x3**2) / (2.0 * 0.1**2)
    )
    ratios = [
        boundary_dominance_ratio(
            calc, edge, tau, config.forward.epsilon, carleman.c_prime
        )
        for tau in carleman.taus
    ]
    ctx.check_ge("carleman.boundary_dominance", ratios[-1], 1.0)
    ctx.check_true(
        "carleman.boundary_dominance_grows",
        all(b > a for a, b in zip(ratios[:-1], ratios[1:], strict=True)),
    )


def forward_suite(ctx: SuiteContext, config: ExperimentConfig) -> None:
    """DN maps, partial data residuals and the uniqueness identities."""
    forward = config.forward
    tol = config.tolerances
    chart = BoxChart.segment(forward.shape)
    gamma1_fn = smooth_bump((0.5, 0.0, 0.0), 0.3, 0.2)
    gamma2_fn = smooth_bump((0.5, 0.05, 0.0), 0.25, 0.3)
    gamma1 = ConductivityField.from_function(chart, gamma1_fn)
    gamma2 = ConductivityField.from_function(chart, gamma2_fn)

    first = dn_map(chart, gamma1, forward.epsilon, workers=config.threads)
    ctx.check_le(
        "forward.dn_symmetry",
        first.symmetry_defect(config.ray.n_pairs, config.seed),
        tol.dn_symmetry,
    )
    probe = chart.boundary.points[:, 0] ** 2
    flux = abs(float(first.total_flux(probe)))
    ctx.check_le("forward.total_flux", flux, tol.dn_symmetry)
    if ctx.out_dir is not None:
        for path in first.export(ctx.out_dir, "dn_map"):
            ctx.add_artifact(path)

    ctx.check_le(
        "forward.partial_residual_identical",
        first.partial_residual(first, forward.epsilon),
        _ZERO_TOLERANCE,
    )
    second = dn_map(chart, gamma2, forward.epsilon, workers=config.threads)
    epsilons = (forward.epsilon, 0.5, 1.5)
    residuals = [first.partial_residual(second, eps) for eps in epsilons]
    ctx.check_true(
        "forward.partial_residual_monotone",
        all(
            b >= a - _ZERO_TOLERANCE
            for a, b in zip(residuals[:-1], residuals[1:], strict=True)
        ),
    )
    ctx.check_ge("forward.partial_residual_distinct", residuals[0], _ZERO_TOLERANCE)

    errors, order = alessandrini_refinement(
        forward.alessandrini_shapes,
        smooth_bump((0.5, 0.0), 0.4, 0.5),
        smooth_bump((0.45, 0.05), 0.35, 0.8),
        lambda x: np.exp(x[..., 0]) * np.cos(x[..., 1]),
        lambda x: x[..., 0] + x[..., 1] ** 2,
    )
    ctx.check_le("forward.alessandrini", errors[-1], tol.alessandrini)
    ctx.check_ge("forward.alessandrini_order", order, tol.refinement_order)

    conformal = conformal_reduction_check(
        chart,
        lambda x: np.exp(2.0 * x[..., 0]),
        gamma1,
        lambda x: x[..., 0] ** 2 - x[..., 1] ** 2,
        config.seed,
    )
    ctx.check_le("forward.conformal_solution", conformal.solution_error, tol.route)
    ctx.check_le("forward.conformal_flux", conformal.flux_error, tol.conformal)
    ctx.check_le("forward.conformal_operator", conformal.operator_error, tol.route)

    quotient = log_quotient_pde_residual(chart, gamma1_fn, gamma2_fn)
    ctx.check_le("forward.log_quotient_routes", quotient.rel_err, tol.route)


def logpolar_suite(ctx: SuiteContext, config: ExperimentConfig) -> None:
    """Log-polar reduction, the boundary-term probe and partial-data residuals."""
    forward = config.forward
    cgo = config.cgo
    tol = config.tolerances

    domain = PointDomain.ball((0.0, 0.0, 3.0), 1.0)
    _, report = logpolar_map(domain, (0.0, 0.0, 0.0), forward.epsilon, seed=config.seed)
    ctx.check_true("theorem2.mask_equal", report.mask_equal)
    ctx.check_le("theorem2.metric_error", report.metric_error, tol.route)
    ctx.check_le("theorem2.phi_error", report.phi_error, tol.route)
    try:
        logpolar_map(domain, (0.0, 0.0, 3.0), forward.epsilon)
    except PreconditionError:
        rejected = True
    else:
        rejected = False
    ctx.check_true("theorem2.hull_rejected", rejected)

    cylinder = probe_cylinder(forward.probe_x1_points, forward.probe_spacing)
    box = ProbeBox.inside(cylinder, forward.probe_half_width)
    gamma1, gamma2 = matched_pair(cylinder)
    pair = CGOPair.from_conductivities(
        cylinder, gamma1, gamma2, cgo.lam, probe_profile(), eta=cgo.eta
    )
    probe = boundary_term_probe(
        box, pair, forward.epsilon, forward.probe_taus, tol.probe_slack, config.seed
    )
    _emit_rates(ctx, "boundary_probe", probe.reports)
    _write(
        ctx,
        "boundary_probe_values",
        _columns(probe.rows()),
        {"epsilon": forward.epsilon},
    )

    admissible = AdmissibleCylinder(base=ConformalDisc(radius=0.5), kappa=0.3)
    chart = BoxChart.admissible(admissible, forward.shape)
    one = dn_map(
        chart, ConductivityField.constant(chart), forward.epsilon, config.threads
    )
    bumped = dn_map(
        chart,
        ConductivityField.from_function(chart, smooth_bump((0.5, 0.0, 0.0), 0.2, 0.3)),
        forward.epsilon,
        config.threads,
    )
    ctx.check_le(
        "theorem2.partial_residual_identical",
        one.partial_residual(one, forward.epsilon),
        _ZERO_TOLERANCE,
    )
    ctx.check_ge(
        "theorem2.partial_residual_distinct",
        one.partial_residual(bumped, forward.epsilon),
        _ZERO_TOLERANCE,
    )


SUITES: dict[Suite, SuiteFn] = {
    Suite.GEOMETRY: geometry_suite,
    Suite.SANTALO: santalo_suite,
    Suite.RAYTRANSFORM: raytransform_suite,
    Suite.MOLLIFY: mollify_suite,
    Suite.G0: g0_suite,
    Suite.CGO: cgo_suite,
    Suite.CARLEMAN: carleman_suite,
    Suite.FORWARD: forward_suite,
    Suite.THEOREM2: logpolar_suite,
}


# =============================================================================
# PUBLIC API
# =============================================================================


def run_suite(
    config: ExperimentConfig, suite: Suite, out_dir: Path | None = None
) -> SuiteRun:
    """Run a suite (or all of them) and write ``<suite>.json`` and artifacts.

    Numerical failures inside a suite are recorded as a failed
    ``<suite>.error`` check so that the remaining suites of ``all`` still run.

    Args:
        config: Validated configuration.
        suite: Suite to run.
        out_dir: Report directory (``config.output_dir`` when ``None``).

    Returns:
        The outcome with its exit code.

    Raises:
        ConfigError: If the configuration or ``GEOTOMO_THREADS`` is invalid.
    """
    config = with_environment(config)
    target = config.output_dir if out_dir is None else out_dir
    target.mkdir(parents=True, exist_ok=True)
    ctx = SuiteContext(str(suite), target)
    selected = list(SUITES) if suite is Suite.ALL else [suite]

    started = time.perf_counter()
    for name in selected:
        logger.info("Running suite '%s' (seed=%d)", name, config.seed)
        try:
            SUITES[name](ctx, config)
        except ConfigError:
            raise
        except GeotomoError as exc:
            logger.error("Suite '%s' aborted: %s", name, exc)
            ctx.record(f"{name}.error", None, None, None, False)
    wallclock = time.perf_counter() - started

    report = ctx.report(round(wallclock, 3))
    path = write_json(target / f"{suite}.json", report)
    failures = ctx.failures
    if failures:
        logger.warning("Suite '%s' failed %d checks", suite, len(failures))
    return SuiteRun(
        suite=suite,
        exit_code=EXIT_FAILURE if failures else EXIT_OK,
        report=report,
        report_path=path,
        failures=failures,
    )


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _diameter(chart: ConformalDisc) -> float:
    """Length of a diameter of the conformal disc in closed form."""
    k, rho = chart.curvature, chart.radius
    if k == 0.0:
        return 2.0 * rho
    root = math.sqrt(abs(k))
    if k > 0.0:
        return 4.0 / root * math.atan(0.5 * root * rho)
    return 4.0 / root * math.atanh(0.5 * root * rho)


def _reconstruction_error(transform: RayTransform, bump: Any, lam: float) -> float:
    try:
        return reconstruct(transform, bump, lam)[1]
    except NonconvergenceError as exc:
        logger.warning("Reconstruction failed at lambda=%g: %s", lam, exc)
        return math.inf


def _columns(rows: Iterable[Mapping[str, Any]]) -> dict[str, list[Any]]:
    columns: dict[str, list[Any]] = {}
    for row in rows:
        for key, value in row.items():
            columns.setdefault(key, []).append(value)
    return columns


def _write(
    ctx: SuiteContext,
    name: str,
    columns: Mapping[str, Sequence[Any]],
    header: Mapping[str, Any] | None = None,
) -> Path | None:
    if ctx.out_dir is None or not columns:
        return None
    meta = {"suite": ctx.suite, "artifact": name, **(header or {})}
    path = write_csv(ctx.out_dir / f"{name}.csv", columns, meta)
    ctx.add_artifact(path)
    return path


def _emit_rates(ctx: SuiteContext, stem: str, reports: Sequence[RateReport]) -> None:
    """Record every report and write one CSV plus gnuplot script per ladder."""
    groups: dict[tuple[float, ...], list[RateReport]] = {}
    for report in reports:
        ctx.record_rate(report)
        groups.setdefault(report.taus, []).append(report)
    for k, group in enumerate(groups.values()):
        name = stem if len(groups) == 1 else f"{stem}_{k}"
        path = _write(ctx, name, rate_columns(group), {"kind": "rates"})
        if path is not None:
            ctx.add_artifact(rate_plot_script(path, group))
