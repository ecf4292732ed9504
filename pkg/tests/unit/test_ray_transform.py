"""Unit tests for the attenuated ray transform, its normal operator and CG."""

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
    ConformalDisc,
    NonconvergenceError,
    NormalRoute,
    PreconditionError,
)
from geotomo.ray_transform import (
    AngularProfile,
    Bump,
    FieldGrid,
    RayTransform,
    bump_family,
    check_attenuation,
    conjugate_gradient,
    invert_normal,
    pairing_test,
    reconstruct,
)
from geotomo.sphere_bundle import build_influx


# =============================================================================
# HELPERS
# =============================================================================
def _transform(
    disc: ConformalDisc, n_boundary: int = 32, n_angles: int = 16
) -> RayTransform:
    return RayTransform(
        FieldGrid.for_chart(disc, 41), build_influx(disc, n_boundary, n_angles)
    )


# =============================================================================
# TESTS: Conjugate gradients
# =============================================================================
def test_conjugate_gradient_solves_diagonal_system() -> None:
    """CG should solve a small SPD system."""
    a = np.diag([1.0, 2.0, 4.0])

    result = conjugate_gradient(lambda x: a @ x, np.ones(3))

    np.testing.assert_allclose(result.solution, [1.0, 0.5, 0.25], atol=1e-12)
    assert result.iterations <= 3


def test_conjugate_gradient_zero_rhs_returns_zero() -> None:
    """A zero right-hand side should return zero without iterating."""
    result = conjugate_gradient(lambda x: 2.0 * x, np.zeros(4))

    assert result.iterations == 0
    assert not np.any(result.solution)


def test_conjugate_gradient_budget_exhaustion_raises() -> None:
    """Running out of iterations above tol should raise NonconvergenceError."""
    a = np.diag([1.0, 2.0, 4.0])

    with pytest.raises(NonconvergenceError) as info:
        conjugate_gradient(lambda x: a @ x, np.ones(3), max_iter=1)

    assert info.value.iterations == 1
    assert info.value.residual > 0.0


def test_conjugate_gradient_plateau_raises_above_accepted_residual() -> None:
    """A plateau with no accepted residual should raise."""
    a = np.diag([1.0, 2.0, 4.0, 8.0])

    with pytest.raises(NonconvergenceError, match="stalled"):
        conjugate_gradient(
            lambda x: a @ x,
            np.ones(4),
            tol=1e-12,
            plateau_window=1,
            plateau_gain=1.0,
        )


def test_conjugate_gradient_plateau_below_accepted_residual_returns_best() -> None:
    """A plateau below the accepted residual should return the best iterate."""
    a = np.diag([1.0, 2.0, 4.0, 8.0])

    result = conjugate_gradient(
        lambda x: a @ x,
        np.ones(4),
        tol=1e-12,
        plateau_window=1,
        plateau_gain=1.0,
        accept_residual=0.9,
    )

    assert result.iterations == 2
    assert result.residual == min(result.history)
    assert result.residual < 0.9


# =============================================================================
# TESTS: Attenuation regime
# =============================================================================
def test_check_attenuation_rejects_large_lambda() -> None:
    """|lambda| above lambda_max should raise PreconditionError."""
    check_attenuation(-0.1, 0.1)

    with pytest.raises(PreconditionError, match="exceeds"):
        check_attenuation(0.2, 0.1)


# =============================================================================
# TESTS: Fields
# =============================================================================
def test_bump_peaks_at_center_and_vanishes_outside() -> None:
    """A bump equals its amplitude at the center and zero beyond its width."""
    bump = Bump(center=(0.1, 0.0), width=0.3, amplitude=2.0)

    values = bump(np.array([[0.1, 0.0], [0.5, 0.0]]))

    np.testing.assert_allclose(values, [2.0, 0.0])


def test_bump_family_is_seeded_and_supported_inside() -> None:
    """The same seed should give the same family, kept off the boundary."""
    family = bump_family(1.0, 6, seed=3)

    assert family == bump_family(1.0, 6, seed=3)
    for bump in family:
        assert np.hypot(*bump.center) + bump.width <= 0.9 + 1e-12


def test_field_grid_rejects_tiny_grids(unit_disc: ConformalDisc) -> None:
    """A grid without room for the padding should raise ValueError."""
    with pytest.raises(ValueError, match="at least"):
        FieldGrid.for_chart(unit_disc, 8)


def test_field_grid_embed_zero_outside(unit_disc: ConformalDisc) -> None:
    """embed() should place unknowns on the disc and zeros elsewhere."""
    fg = FieldGrid.for_chart(unit_disc, 21)

    full = fg.embed(np.ones(fg.n_unknowns))

    assert full.shape == (21, 21)
    assert full[0, 0] == 0.0
    assert full[10, 10] == 1.0


# =============================================================================
# TESTS: Ray transform
# =============================================================================
def test_ray_transform_of_one_is_exit_time(unit_disc: ConformalDisc) -> None:
    """T_0 1 should be the exit time of every influx ray."""
    rt = _transform(unit_disc)

    chords = rt.forward(lambda x: np.ones(len(x)), 0.0)

    np.testing.assert_allclose(chords, rt.exit_times, atol=1e-8)


def test_ray_transform_attenuation_shrinks_data(unit_disc: ConformalDisc) -> None:
    """A positive attenuation should not increase data of a nonnegative field."""
    rt = _transform(unit_disc)
    bump = Bump(center=(0.0, 0.0), width=0.5)

    plain = rt.forward(bump, 0.0)
    damped = rt.forward(bump, 0.1)

    assert np.all(damped <= plain + 1e-15)
    assert float(np.max(plain - damped)) > 0.0


def test_adjoint_of_one_is_two_pi(unit_disc: ConformalDisc) -> None:
    """T*_0 1 should equal 2 pi at unknown nodes away from the boundary."""
    rt = _transform(unit_disc)
    inside = np.hypot(*rt.field_grid.points.T) <= 0.8

    back = rt.adjoint(np.ones(len(rt.influx)), 0.0)

    np.testing.assert_allclose(back[inside], 2.0 * math.pi, rtol=1e-8)


@pytest.mark.slow
def test_adjoint_pairing_matches_forward(unit_disc: ConformalDisc) -> None:
    """(T f, h) on the influx should equal (f, T* h) on the grid."""
    rt = _transform(unit_disc, 64, 32)
    bump = Bump(center=(0.2, -0.1), width=0.45)
    influx = rt.influx
    h = (1.0 + 0.5 * np.cos(2.0 * influx.theta - 0.3)) * np.cos(influx.alpha) ** 2
    f = rt.field_grid.sample(bump)

    left = influx.inner(rt.forward(bump, 0.05), h)
    right = rt.field_grid.inner(f, rt.adjoint(h, 0.05))

    scale = rt.field_grid.norm(f) * math.sqrt(float(np.real(influx.inner(h, h))))
    assert abs(left - right) / scale <= 1e-3


def test_ray_transform_matrix_is_cached(unit_disc: ConformalDisc) -> None:
    """matrix() should reuse the assembled operator for the same lambda."""
    rt = _transform(unit_disc, 8, 4)

    assert rt.matrix(0.05) is rt.matrix(0.05)


def test_ray_transform_data_zeroes_tangential_samples(
    unit_disc: ConformalDisc,
) -> None:
    """data() should vanish wherever mu is below the cutoff."""
    influx = build_influx(unit_disc, 16, 8)
    rt = RayTransform(FieldGrid.for_chart(unit_disc, 21), influx, cutoff=0.5)

    data = rt.data(lambda x: np.ones(len(x)), 0.0)

    assert np.all(data[influx.mu < 0.5] == 0.0)
    assert np.all(data[influx.mu >= 0.5] > 0.0)


# =============================================================================
# TESTS: Normal operator
# =============================================================================
def test_normal_operator_transpose_route_is_self_adjoint(
    unit_disc: ConformalDisc,
) -> None:
    """<N a, b> should equal <a, N b> in the grid inner product."""
    rt = _transform(unit_disc)
    normal = rt.normal(0.05, NormalRoute.TRANSPOSE)
    rng = np.random.default_rng(0)
    a = rng.standard_normal(rt.field_grid.n_unknowns)
    b = rng.standard_normal(rt.field_grid.n_unknowns)

    left = normal.inner(normal(a), b)
    right = normal.inner(a, normal(b))

    assert left == pytest.approx(right, rel=1e-10)
    assert normal.inner(normal(a), a) >= 0.0


def test_invert_normal_rejects_out_of_regime_lambda(
    unit_disc: ConformalDisc,
) -> None:
    """Inversion outside lambda_max should raise before iterating."""
    rt = _transform(unit_disc, 8, 4)
    normal = rt.normal(0.5)

    with pytest.raises(PreconditionError):
        invert_normal(normal, np.ones(rt.field_grid.n_unknowns), lambda_max=0.1)


def test_reconstruct_recovers_bump(unit_disc: ConformalDisc) -> None:
    """CG on the normal equations should recover a smooth bump."""
    rt = _transform(unit_disc, 64, 32)
    bump = Bump(center=(0.2, -0.1), width=0.45)

    _, error = reconstruct(rt, bump, 0.05)

    assert error <= 2e-2


@pytest.mark.slow
@pytest.mark.parametrize("lam", [0.0, -0.05])
def test_reconstruct_recovers_bump_when_residual_stalls(
    unit_disc: ConformalDisc, lam: float
) -> None:
    """Reconstruction should succeed at every in-regime attenuation."""
    rt = _transform(unit_disc, 64, 32)
    bump = Bump(center=(0.2, -0.1), width=0.45)

    _, error = reconstruct(rt, bump, lam)

    assert error <= 2e-2


# =============================================================================
# TESTS: Pairing
# =============================================================================
def test_angular_profile_peak_and_support() -> None:
    """The profile equals one at its center and vanishes at its edge."""
    profile = AngularProfile(center=0.3, width=0.4)

    np.testing.assert_allclose(profile(np.array([0.3, 0.7, -0.2])), [1.0, 0.0, 0.0])
    assert 0.0 < profile.integral() < 0.8


def test_pairing_routes_agree(unit_disc: ConformalDisc) -> None:
    """Fan-beam and grid quadrature routes of the polar pairing should agree."""
    fg = FieldGrid.for_chart(unit_disc, 41)
    bump = Bump(center=(0.0, 0.0), width=0.5)

    result = pairing_test(fg, bump, [-1.15, 0.0], 0.1, AngularProfile(width=0.4))

    assert abs(result.fan_route) > 0.0
    assert result.rel_diff <= 1e-2
