"""Unit tests for charts, geodesic tracing, simplicity and polar coordinates."""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import math

# Third-party
import numpy as np
import pytest

# Project/Local
from geotomo import (
    AdmissibleCylinder,
    ChartKind,
    ConformalDisc,
    DomainError,
    GeodesicRangeError,
    PhaseState,
    geodesic_trace,
)
from geotomo.geometry import (
    christoffel,
    exp_map,
    gauss_lemma_defect,
    metric_norm2,
    polar_coords,
    simplicity_check,
    step_order,
    time_reversal_check,
    unit_speed_drift,
)


# =============================================================================
# TESTS: Charts
# =============================================================================
def test_conformal_disc_from_kind_signs_curvature() -> None:
    """from_kind() should take the curvature magnitude and apply the sign."""
    disc = ConformalDisc.from_kind(ChartKind.HYPERBOLIC_DISC, curvature=1.0)

    assert disc.curvature == -1.0
    assert disc.kind is ChartKind.HYPERBOLIC_DISC


def test_conformal_disc_rejects_radius_beyond_horizon() -> None:
    """A hyperbolic chart must stay inside the Poincare horizon."""
    with pytest.raises(ValueError, match="horizon"):
        ConformalDisc(radius=1.9, curvature=-1.0, margin=0.25)


def test_conformal_disc_area_closed_form_matches_quadrature(
    spherical_cap: ConformalDisc,
) -> None:
    """interior_quadrature() should integrate one to the closed-form area."""
    _, weights = spherical_cap.interior_quadrature(24, 48)

    assert weights.sum() == pytest.approx(spherical_cap.area(), rel=1e-10)


def test_conformal_disc_boundary_curvature(spherical_cap: ConformalDisc) -> None:
    """The cap boundary should have geodesic curvature (1 - K/4)/rho."""
    assert spherical_cap.boundary_curvature() == pytest.approx(0.75)


def test_christoffel_fallback_matches_closed_form(
    spherical_cap: ConformalDisc,
) -> None:
    """Closed-form symbols should agree with the generic computation."""
    x = np.array([[0.2, -0.3], [0.5, 0.1]])

    np.testing.assert_allclose(
        christoffel(spherical_cap, x), spherical_cap.christoffel_exact(x), atol=1e-8
    )


def test_christoffel_exact_cylinder_matches_fallback() -> None:
    """Closed-form cylinder symbols should agree with the generic computation."""
    cyl = AdmissibleCylinder(base=ConformalDisc(radius=0.5), kappa=0.3)
    x = np.array([[0.2, 0.1, -0.2], [0.7, -0.3, 0.05]])

    np.testing.assert_allclose(christoffel(cyl, x), cyl.christoffel_exact(x), atol=1e-8)


def test_christoffel_exact_cylinder_needs_flat_base() -> None:
    """Closed-form cylinder symbols exist only over a Euclidean base."""
    cyl = AdmissibleCylinder(base=ConformalDisc(radius=0.5, curvature=1.0))

    with pytest.raises(DomainError, match="Euclidean base"):
        cyl.christoffel_exact(np.zeros((1, 3)))


def test_admissible_cylinder_metric_is_warped() -> None:
    """The cylinder metric should be exp(2 kappa x1) times the product metric."""
    cyl = AdmissibleCylinder(base=ConformalDisc(radius=0.5), kappa=0.3)
    x = np.array([0.4, 0.1, 0.0])

    diag = cyl.metric_diagonal(x)

    assert diag[0] == pytest.approx(math.exp(0.24))
    assert diag[1] == pytest.approx(math.exp(0.24))


# =============================================================================
# TESTS: Geodesics
# =============================================================================
def test_geodesic_trace_diameter_exit_time(unit_disc: ConformalDisc) -> None:
    """A Euclidean diameter should exit after time 2 at the antipode."""
    start = PhaseState.unit(unit_disc, [-1.0, 0.0], [1.0, 0.0])

    trace = geodesic_trace(unit_disc, start)

    assert trace.exit_time == pytest.approx(2.0, abs=1e-8)
    np.testing.assert_allclose(trace.exit_point, [1.0, 0.0], atol=1e-8)


def test_geodesic_trace_spherical_diameter(spherical_cap: ConformalDisc) -> None:
    """On the cap the diameter has length 4 arctan(1/2)."""
    start = PhaseState.unit(spherical_cap, [-1.0, 0.0], [1.0, 0.0])

    trace = geodesic_trace(spherical_cap, start, step=0.02)

    assert trace.exit_time == pytest.approx(4.0 * math.atan(0.5), abs=1e-6)


def test_geodesic_trace_keeps_unit_speed(spherical_cap: ConformalDisc) -> None:
    """The renormalized flow should keep |xi|_g = 1."""
    start = PhaseState.unit(spherical_cap, [-1.0, 0.0], [1.0, 0.4])

    trace = geodesic_trace(spherical_cap, start)

    assert unit_speed_drift(spherical_cap, trace) <= 1e-9


def test_step_order_is_fourth_order(spherical_cap: ConformalDisc) -> None:
    """RK4 should show an observed order near four on a curved chart."""
    order = step_order(spherical_cap, [-0.5, 0.1], [1.0, 0.3])

    assert 3.5 <= order <= 4.5


def test_time_reversal_returns_to_start(spherical_cap: ConformalDisc) -> None:
    """Tracing back from the exit should return to the boundary start."""
    theta = np.linspace(0.0, 2.0 * math.pi, 6, endpoint=False)
    starts = spherical_cap.boundary_point(theta)
    directions = -starts + 0.3 * spherical_cap.boundary_velocity(theta)

    assert time_reversal_check(spherical_cap, starts, directions, 0.02) <= 1e-6


# =============================================================================
# TESTS: Simplicity
# =============================================================================
def test_simplicity_check_euclidean_disc_passes(unit_disc: ConformalDisc) -> None:
    """The Euclidean disc is simple."""
    report = simplicity_check(unit_disc, 16)

    assert report.passed
    assert not report.conjugate_points
    assert report.closed_form_curvature == pytest.approx(1.0)
    assert report.min_second_fundamental_form > 0.0


def test_simplicity_check_hyperbolic_disc_passes() -> None:
    """A hyperbolic disc has no conjugate points and a convex boundary."""
    disc = ConformalDisc(radius=1.0, curvature=-1.0)

    assert simplicity_check(disc, 12).passed


def test_simplicity_check_positive_curvature_near_conjugate_distance_fails() -> None:
    """A curvature-3 disc wider than the conjugate distance is not simple."""
    disc = ConformalDisc(radius=1.2, curvature=3.0)

    report = simplicity_check(disc, 16)

    assert not report.passed
    assert report.conjugate_points


# =============================================================================
# TESTS: Polar coordinates
# =============================================================================
def test_exp_map_euclidean_is_straight(unit_disc: ConformalDisc) -> None:
    """On the flat disc the exponential map moves along straight lines."""
    point = exp_map(unit_disc, [-1.2, 0.0], 0.5, 0.0)

    np.testing.assert_allclose(point, [-0.7, 0.0], atol=1e-10)


def test_exp_map_rejects_negative_length(unit_disc: ConformalDisc) -> None:
    """A negative geodesic length should raise ValueError."""
    with pytest.raises(ValueError, match="nonnegative"):
        exp_map(unit_disc, [-1.2, 0.0], -0.1, 0.0)


def test_exp_map_leaving_enlarged_chart_raises(unit_disc: ConformalDisc) -> None:
    """Shooting past the enlarged chart should raise GeodesicRangeError."""
    with pytest.raises(GeodesicRangeError):
        exp_map(unit_disc, [-1.2, 0.0], 0.5, math.pi)


def test_polar_coords_invert_exp_map(spherical_cap: ConformalDisc) -> None:
    """polar_coords() should recover (r, theta) and satisfy exp_map."""
    omega = np.array([-1.15, 0.0])
    targets = np.array([[0.0, 0.0], [0.3, -0.4], [-0.5, 0.6]])

    polar = polar_coords(spherical_cap, omega, targets)

    back = exp_map(spherical_cap, omega, polar.r, polar.theta)
    np.testing.assert_allclose(back, targets, atol=1e-8)
    assert np.all(polar.det_g0 > 0.0)


def test_polar_coords_round_trip_on_hundred_points(
    spherical_cap: ConformalDisc,
) -> None:
    """Seeded interior samples should map back through exp_map."""
    omega = np.array([-1.15, 0.0])
    rng = np.random.default_rng(0)
    radius = 0.9 * np.sqrt(rng.uniform(size=100))
    angle = rng.uniform(0.0, 2.0 * math.pi, 100)
    targets = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=-1)

    polar = polar_coords(spherical_cap, omega, targets)

    back = exp_map(spherical_cap, omega, polar.r, polar.theta)
    np.testing.assert_allclose(back, targets, atol=1e-6)
    assert polar.r.shape == (100,)


def test_gauss_lemma_holds(spherical_cap: ConformalDisc) -> None:
    """Radial and angular derivatives of exp are g-orthogonal."""
    defect = gauss_lemma_defect(
        spherical_cap, [-1.15, 0.0], np.array([0.5, 1.0]), np.array([0.2, -0.3])
    )

    assert float(np.max(defect)) <= 1e-6


def test_metric_norm2_scales_with_conformal_factor(
    spherical_cap: ConformalDisc,
) -> None:
    """|v|_g^2 should equal sigma(x) |v|^2."""
    x = np.array([0.6, 0.0])
    v = np.array([0.0, 2.0])

    expected = 4.0 * float(spherical_cap.conformal_factor(x))
    assert float(metric_norm2(spherical_cap, x, v)) == pytest.approx(expected)
