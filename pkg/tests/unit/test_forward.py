"""Unit tests for box charts, the conductivity solver, DN maps and identities."""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import json
import math
from pathlib import Path

# Third-party
import numpy as np
import pytest

# Project/Local
from geotomo import (
    AssemblyError,
    ConfigError,
    DomainError,
    PreconditionError,
    RateFitError,
    geometric_ladder,
)
from geotomo.cgo import ExtendedCylinder
from geotomo.constants import DEFAULT_OMEGA
from geotomo.forward import (
    PROBE_QUANTITIES,
    BoxChart,
    CGOPair,
    ConductivityField,
    DirichletSolver,
    PointDomain,
    ProbeBox,
    alessandrini_check,
    alessandrini_refinement,
    boundary_term_probe,
    conformal_reduction_check,
    dn_map,
    log_quotient_pde_residual,
    logpolar_map,
    matched_pair,
    normal_flux,
    partial_data_residual,
    probe_cylinder,
    probe_profile,
    smooth_bump,
    solve_dirichlet,
)


# =============================================================================
# HELPERS
# =============================================================================
def _face_interior(chart: BoxChart) -> np.ndarray:
    """Boundary nodes on the x1 = 1 face away from its edges."""
    points = chart.boundary.points
    half = chart.grid.upper[1]
    return (
        np.isclose(points[:, 0], 1.0)
        & (np.abs(points[:, 1]) < half - 1e-12)
        & (np.abs(points[:, 2]) < half - 1e-12)
    )


# =============================================================================
# TESTS: BoxChart
# =============================================================================
def test_box_chart_segment_counts_nodes() -> None:
    """A 5x3x3 segment has 42 boundary nodes and 3 interior nodes."""
    chart = BoxChart.segment((5, 3, 3))

    assert chart.boundary.size == 42
    assert chart.interior.size == 3


def test_box_chart_masks_partition_boundary() -> None:
    """The eps masks split the boundary; x1 faces land on opposite sides."""
    chart = BoxChart.segment((9, 5, 5))
    minus, plus = chart.masks(0.05)
    x1 = chart.boundary.points[:, 0]

    assert np.all(minus ^ plus)
    assert np.all(minus[np.isclose(x1, 0.0)])
    assert np.all(plus[_face_interior(chart)])


def test_box_chart_trace_and_extend_agree() -> None:
    """extend() should rebuild a nodal field from its interior and trace."""
    chart = BoxChart.segment((5, 3, 3))
    u = np.arange(chart.grid.size, dtype=float).reshape(chart.grid.shape)

    rebuilt = chart.extend(u.ravel()[chart.interior], chart.trace(u))

    np.testing.assert_array_equal(rebuilt, u)


def test_box_chart_rejects_nonpositive_metric() -> None:
    """A vanishing metric should raise DomainError."""
    grid = BoxChart.segment((5, 3, 3)).grid
    chart = BoxChart(grid=grid, metric_fn=lambda x: np.zeros(x.shape))

    with pytest.raises(DomainError, match="not positive definite"):
        chart.metric_at(grid.points())


def test_box_chart_scaled_multiplies_metric() -> None:
    """scaled(c) should multiply every metric component by c."""
    chart = BoxChart.segment((5, 3, 3))
    scaled = chart.scaled(lambda x: np.full(x.shape[:-1], 3.0))

    np.testing.assert_allclose(scaled.metric_at(np.zeros((2, 3))), 3.0)


# =============================================================================
# TESTS: Dirichlet solver
# =============================================================================
def test_solve_dirichlet_reproduces_harmonic_quadratic() -> None:
    """The discrete solution of x1^2 - x2^2 data should be exact."""
    chart = BoxChart.segment((9, 5, 5))
    gamma = ConductivityField.constant(chart)

    u = solve_dirichlet(chart, gamma, lambda x: x[:, 0] ** 2 - x[:, 1] ** 2)

    x1, x2, _ = chart.grid.mesh()
    np.testing.assert_allclose(u, x1**2 - x2**2, atol=1e-10)


def test_dirichlet_solver_rejects_negative_conductivity() -> None:
    """A negative conductivity should fail assembly."""
    chart = BoxChart.segment((5, 3, 3))
    gamma = ConductivityField(values=-np.ones(chart.grid.shape))

    with pytest.raises(AssemblyError, match="indefinite"):
        DirichletSolver(chart, gamma)


def test_dirichlet_solver_rejects_wrong_trace_length() -> None:
    """Boundary data with the wrong row count should raise ValueError."""
    chart = BoxChart.segment((5, 3, 3))
    solver = DirichletSolver(chart, ConductivityField.constant(chart))

    with pytest.raises(ValueError, match="boundary nodes"):
        solver.solve(np.ones(5))


def test_conductivity_without_closed_form_cannot_be_evaluated() -> None:
    """at() needs the closed form of the conductivity."""
    gamma = ConductivityField(values=np.ones((3, 3, 3)))

    with pytest.raises(ValueError, match="no closed form"):
        gamma.at(np.zeros((1, 3)))


def test_smooth_bump_is_one_outside_support() -> None:
    """The bump conductivity equals 1 + amplitude at its center."""
    gamma = smooth_bump((0.5, 0.0, 0.0), 0.3, 0.2)

    values = gamma(np.array([[0.5, 0.0, 0.0], [0.0, 0.0, 0.0]]))

    np.testing.assert_allclose(values, [1.2, 1.0])


def test_solve_dirichlet_layered_conductivity_carries_constant_flux() -> None:
    """A conductivity varying in x1 only gives the 1D solution and its flux."""
    chart = BoxChart.segment((17, 5, 5))
    gamma = ConductivityField.from_function(chart, lambda x: 1.0 + 0.5 * x[..., 0])
    resistance = 2.0 * math.log(1.5)

    def exact(x: np.ndarray) -> np.ndarray:
        return 2.0 * np.log(1.0 + 0.5 * x[..., 0]) / resistance

    u = solve_dirichlet(chart, gamma, exact)
    flux = normal_flux(chart, gamma, u)

    expected = exact(chart.grid.points()).reshape(u.shape)
    np.testing.assert_allclose(u, expected, atol=1e-3)
    np.testing.assert_allclose(flux[_face_interior(chart)], 1.0 / resistance, rtol=1e-2)


# =============================================================================
# TESTS: DN map
# =============================================================================
def test_dn_map_annihilates_constants() -> None:
    """Constant data carries no current."""
    chart = BoxChart.segment((9, 5, 5))
    dn = dn_map(chart, ConductivityField.constant(chart))

    np.testing.assert_allclose(dn.apply(np.ones(dn.boundary.size)), 0.0, atol=1e-10)


def test_dn_map_flux_of_linear_data() -> None:
    """For u = x1 the current through the x1 = 1 face is one."""
    chart = BoxChart.segment((9, 5, 5))
    dn = dn_map(chart, ConductivityField.constant(chart))

    flux = dn.apply(chart.boundary.points[:, 0])

    np.testing.assert_allclose(flux[_face_interior(chart)], 1.0, atol=1e-10)
    assert abs(dn.total_flux(chart.boundary.points[:, 0])) < 1e-10


def test_dn_map_is_symmetric() -> None:
    """The weighted pairing of the DN map should be symmetric."""
    chart = BoxChart.segment((9, 5, 5))
    gamma = ConductivityField.from_function(chart, smooth_bump((0.5, 0.0, 0.0), 0.3))

    assert dn_map(chart, gamma).symmetry_defect(4) <= 1e-10


def test_normal_flux_of_linear_solution() -> None:
    """One-sided differences of u = x1 give a unit flux on the x1 = 1 face."""
    chart = BoxChart.segment((9, 5, 5))
    gamma = ConductivityField.constant(chart)
    x1 = chart.grid.mesh()[0]

    flux = normal_flux(chart, gamma, x1)

    np.testing.assert_allclose(flux[_face_interior(chart)], 1.0, atol=1e-10)


def test_partial_data_residual_vanishes_for_equal_conductivities() -> None:
    """Identical conductivities produce identical partial data."""
    chart = BoxChart.segment((9, 5, 5))
    gamma = ConductivityField.constant(chart)

    assert partial_data_residual(chart, gamma, gamma) <= 1e-12


def test_partial_data_residual_distinct_pair_grows_with_epsilon() -> None:
    """Distinct conductivities give a positive residual nondecreasing in eps."""
    chart = BoxChart.segment((9, 5, 5))
    gamma1 = ConductivityField.from_function(chart, smooth_bump((0.5, 0.0, 0.0), 0.3))
    gamma2 = ConductivityField.from_function(
        chart, smooth_bump((0.5, 0.05, 0.0), 0.25, 0.3)
    )
    first = dn_map(chart, gamma1)
    second = dn_map(chart, gamma2)

    residuals = [first.partial_residual(second, eps) for eps in (0.05, 0.5, 1.5)]

    assert partial_data_residual(chart, gamma1, gamma2) == pytest.approx(
        residuals[0]
    )
    assert residuals[0] > 1e-10
    assert all(
        b >= a * (1.0 - 1e-12) for a, b in zip(residuals, residuals[1:], strict=False)
    )


def test_partial_residual_rejects_different_grids() -> None:
    """DN maps on different grids cannot be compared."""
    small = BoxChart.segment((5, 3, 3))
    large = BoxChart.segment((9, 5, 5))
    first = dn_map(small, ConductivityField.constant(small))
    second = dn_map(large, ConductivityField.constant(large))

    with pytest.raises(ValueError, match="different grids"):
        first.partial_residual(second)


def test_dn_map_export_writes_matrix_and_manifest(tmp_path: Path) -> None:
    """export() should write a CSV and a manifest naming every boundary node."""
    chart = BoxChart.segment((5, 3, 3))
    dn = dn_map(chart, ConductivityField.constant(chart))

    csv_path, json_path = dn.export(tmp_path)

    assert csv_path.exists()
    manifest = json.loads(json_path.read_text())
    assert len(manifest["nodes"]) == chart.boundary.size
    assert manifest["epsilon"] == pytest.approx(dn.epsilon)


# =============================================================================
# TESTS: Identities
# =============================================================================
def test_conformal_reduction_with_constant_factor() -> None:
    """A constant conformal factor folds exactly into the conductivity."""
    chart = BoxChart.segment((9, 5, 5))
    gamma = ConductivityField.from_function(chart, smooth_bump((0.5, 0.0, 0.0), 0.3))

    report = conformal_reduction_check(
        chart, lambda x: np.full(x.shape[:-1], 4.0), gamma, lambda x: x[:, 0]
    )

    assert report.max_error <= 1e-10


def test_conformal_reduction_with_exponential_factor() -> None:
    """c = exp(2 x1) folds into the conductivity up to roundoff."""
    chart = BoxChart.segment((17, 9, 9))
    gamma = ConductivityField.from_function(chart, smooth_bump((0.5, 0.0, 0.0), 0.3))

    report = conformal_reduction_check(
        chart,
        lambda x: np.exp(2.0 * x[..., 0]),
        gamma,
        lambda x: x[..., 0] ** 2 - x[..., 1] ** 2,
    )

    assert report.solution_error <= 1e-6
    assert report.flux_error <= 1e-5
    assert report.operator_error <= 1e-6


def test_alessandrini_distinct_pair_sides_agree() -> None:
    """Interior and boundary sides should agree for distinct conductivities."""
    chart = BoxChart.segment((65, 65))
    gamma1 = ConductivityField.from_function(chart, smooth_bump((0.5, 0.0), 0.25))
    gamma2 = ConductivityField.from_function(
        chart, smooth_bump((0.45, 0.05), 0.2, 0.3)
    )
    u1 = solve_dirichlet(
        chart, gamma1, lambda x: np.exp(x[..., 0]) * np.cos(x[..., 1])
    )
    u2 = solve_dirichlet(chart, gamma2, lambda x: x[..., 0] + x[..., 1] ** 2)

    report = alessandrini_check(chart, gamma1, gamma2, u1, u2)

    assert abs(report.lhs) > 0.0
    assert report.rel_err <= 1e-3


def test_alessandrini_refinement_needs_two_levels() -> None:
    """A single refinement level cannot give an order."""
    with pytest.raises(RateFitError, match="two levels"):
        alessandrini_refinement(
            ((17, 17),),
            smooth_bump((0.5, 0.0), 0.4, 0.5),
            smooth_bump((0.45, 0.05), 0.35, 0.8),
            lambda x: x[..., 0],
            lambda x: x[..., 1],
        )


def test_alessandrini_equal_conductivities_is_zero() -> None:
    """Both sides vanish when the conductivities agree."""
    chart = BoxChart.segment((9, 5, 5))
    gamma = ConductivityField.constant(chart)
    u = solve_dirichlet(chart, gamma, lambda x: x[:, 0])

    report = alessandrini_check(chart, gamma, gamma, u, u)

    assert report.lhs == 0.0
    assert report.rhs == 0.0
    assert report.rel_err == 0.0


def test_log_quotient_equal_conductivities() -> None:
    """Equal conductivities give a zero expression and boundary mismatch."""
    chart = BoxChart.segment((5, 3, 3))

    def same(x: np.ndarray) -> np.ndarray:
        return 1.0 + 0.1 * x[:, 0]

    report = log_quotient_pde_residual(chart, same, same)

    assert report.rel_err == 0.0
    assert report.residual == 0.0


def test_log_quotient_detects_boundary_mismatch() -> None:
    """Scaling one conductivity shows up as a boundary mismatch of log 2."""
    chart = BoxChart.segment((5, 3, 3))

    def gamma1(x: np.ndarray) -> np.ndarray:
        return np.ones(len(x))

    def gamma2(x: np.ndarray) -> np.ndarray:
        return np.full(len(x), 2.0)

    report = log_quotient_pde_residual(chart, gamma1, gamma2)

    assert report.boundary_mismatch == pytest.approx(math.log(2.0))


# =============================================================================
# TESTS: Log-polar chart
# =============================================================================
def test_logpolar_map_metric_and_masks() -> None:
    """The pulled-back metric is conformal to a product and masks agree."""
    domain = PointDomain.ball((0.0, 0.0, 3.0), 1.0)

    chart, report = logpolar_map(domain, (0.0, 0.0, 0.0))

    assert report.mask_equal
    assert report.metric_error < 1e-8
    assert report.phi_error < 1e-12
    assert report.n_minus + report.n_plus == 400
    assert chart.separation > 0.0


def test_logpolar_map_rejects_pole_in_hull() -> None:
    """A pole inside the convex hull cannot be separated."""
    domain = PointDomain.ball((0.0, 0.0, 3.0), 1.0)

    with pytest.raises(PreconditionError):
        logpolar_map(domain, (0.0, 0.0, 3.0))


def test_logpolar_cylinder_spans_log_distances() -> None:
    """The admissible cylinder runs from log 2 to log 4 in y1."""
    domain = PointDomain.ball((0.0, 0.0, 3.0), 1.0)
    chart, _ = logpolar_map(domain, (0.0, 0.0, 0.0))

    cylinder = chart.cylinder(domain)

    assert cylinder.x1_min == pytest.approx(math.log(2.0), abs=1e-2)
    assert cylinder.x1_max == pytest.approx(math.log(4.0), abs=1e-2)
    assert cylinder.kappa == 1.0


def test_logpolar_round_trip_points() -> None:
    """from_chart() should invert to_chart() on the domain samples."""
    domain = PointDomain.ball((0.0, 0.0, 3.0), 1.0, n_points=50)
    chart, _ = logpolar_map(domain, (0.0, 0.0, 0.0))

    back = chart.from_chart(chart.to_chart(domain.points))

    np.testing.assert_allclose(back, domain.points, atol=1e-10)


def test_point_domain_rejects_high_dimension() -> None:
    """Ball samples exist in two and three dimensions only."""
    with pytest.raises(ValueError, match="2D or 3D"):
        PointDomain.ball((0.0, 0.0, 0.0, 0.0), 1.0)


# =============================================================================
# TESTS: Probes
# =============================================================================
def test_probe_box_rejects_box_leaving_disc() -> None:
    """A probe box wider than the disc should raise DomainError."""
    cylinder = ExtendedCylinder(n_x1=16, spacing=0.125)

    with pytest.raises(DomainError, match="leaves the disc"):
        ProbeBox.inside(cylinder, half_width=0.4)


def test_probe_box_requires_faces_on_nodes() -> None:
    """Box faces between cylinder nodes should raise ValueError."""
    cylinder = ExtendedCylinder(n_x1=16, spacing=0.125)

    with pytest.raises(ValueError, match="grid nodes"):
        ProbeBox.inside(cylinder)


def test_boundary_term_probe_rejects_unmatched_conductivities() -> None:
    """Conductivities that differ on the box boundary should raise."""
    cylinder = probe_cylinder()
    box = ProbeBox.inside(cylinder)
    gamma = np.ones(cylinder.shape)
    pair = CGOPair.from_conductivities(cylinder, gamma, 2.0 * gamma)

    with pytest.raises(PreconditionError, match="differ to first order"):
        boundary_term_probe(box, pair)


@pytest.mark.slow
def test_boundary_term_probe_vanishes_for_equal_conductivities() -> None:
    """With gamma1 = gamma2 the boundary term is zero at every tau."""
    cylinder = probe_cylinder()
    box = ProbeBox.inside(cylinder)
    gamma, _ = matched_pair(cylinder)
    pair = CGOPair.from_conductivities(cylinder, gamma, gamma)

    result = boundary_term_probe(box, pair)

    assert set(result.values) == set(PROBE_QUANTITIES)
    assert result.values["boundary_term"] == (0.0,) * len(result.taus)
    assert [r.quantity for r in result.reports] == [
        f"probe.{name}" for name in PROBE_QUANTITIES
    ]
    assert result.reports[0].passed


def test_boundary_term_probe_rejects_unresolved_ladder() -> None:
    """A ladder whose top exceeds the resolution limit should raise."""
    cylinder = probe_cylinder()
    box = ProbeBox.inside(cylinder)
    gamma1, gamma2 = matched_pair(cylinder)
    pair = CGOPair.from_conductivities(cylinder, gamma1, gamma2)

    with pytest.raises(ConfigError, match="unresolved"):
        boundary_term_probe(box, pair, taus=geometric_ladder(8.0, math.sqrt(2.0), 5))


def test_matched_pair_contrast_lies_outside_probe_profile() -> None:
    """The profile of u1 should vanish on every ray through the contrast."""
    cylinder = probe_cylinder()
    gamma1, gamma2 = matched_pair(cylinder)
    _, x2, x3 = cylinder.mesh()
    contrast = gamma2 != gamma1

    theta = np.arctan2(x3[contrast], x2[contrast] - DEFAULT_OMEGA[0])

    assert np.any(contrast)
    assert not np.any(probe_profile()(theta))
