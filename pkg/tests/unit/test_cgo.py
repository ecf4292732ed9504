"""Unit tests for the cylinder, mollified families and CGO construction."""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import logging

# Third-party
import numpy as np
import pytest

# Project/Local
from geotomo import (
    ConfigError,
    DomainError,
    ExceptionalTauError,
    PreconditionError,
    X1Closure,
    geometric_ladder,
)
from geotomo.cgo import (
    QUANTITIES,
    CGOParams,
    ExtendedCylinder,
    MollifiedFamily,
    PerturbedInverse,
    ShiftedInverse,
    build_cgo,
    bump_conductivity,
    cgo_rate_reports,
    conjugate,
    cusp_conductivity,
    g0_norm_ladder,
    smooth_cutoff,
    solve_with_retry,
)
from geotomo.grids import BoxGrid, DiagonalCalculus


# =============================================================================
# HELPERS
# =============================================================================
def _small_cylinder(closure: X1Closure = X1Closure.ANTIPERIODIC) -> ExtendedCylinder:
    return ExtendedCylinder(n_x1=16, spacing=0.125, closure=closure)


# =============================================================================
# TESTS: Cylinder
# =============================================================================
def test_smooth_cutoff_steps_from_one_to_zero() -> None:
    """The cutoff is one inside, one half mid-way and zero beyond its width."""
    values = smooth_cutoff(np.array([-1.0, 0.05, 1.0]), 0.1)

    np.testing.assert_allclose(values, [1.0, 0.5, 0.0])


def test_cylinder_extends_x1_interval() -> None:
    """The grid should cover 1.5 times the x1 interval, centered on it."""
    cyl = _small_cylinder()

    assert cyl.length == pytest.approx(1.5)
    assert cyl.x1[0] == pytest.approx(-0.25)
    assert cyl.shape == (16, cyl.n_side, cyl.n_side)


def test_cylinder_rejects_odd_x1_count() -> None:
    """An odd number of x1 nodes should raise ValueError."""
    with pytest.raises(ValueError, match="even"):
        ExtendedCylinder(n_x1=15, spacing=0.125)


def test_cylinder_modes_round_trip() -> None:
    """from_modes(to_modes(u)) should return u on the transversal mask."""
    cyl = _small_cylinder()
    rng = np.random.default_rng(1)
    u = cyl.restrict(rng.standard_normal(cyl.shape) + 0j)

    np.testing.assert_allclose(cyl.from_modes(cyl.to_modes(u)), u, atol=1e-10)


# =============================================================================
# TESTS: Shifted inverse
# =============================================================================
def test_shifted_inverse_solves_operator() -> None:
    """G_{0,t} should invert the discrete shifted Laplacian."""
    cyl = _small_cylinder()
    g0 = ShiftedInverse(cyl, 8.0)
    f = cyl.restrict(np.ones(cyl.shape, dtype=complex))

    residual = cyl.norm(g0.operator(g0(f)) - f)

    assert residual <= 1e-10 * cyl.norm(f)


def test_shifted_inverse_norm_decays_with_tau() -> None:
    """The L2 operator norm should shrink as tau grows."""
    cyl = _small_cylinder()

    assert ShiftedInverse(cyl, 16.0).norm(0) < ShiftedInverse(cyl, 8.0).norm(0)


def test_shifted_inverse_rejects_small_tau() -> None:
    """|t| below tau_min should raise PreconditionError."""
    with pytest.raises(PreconditionError, match="below the minimum"):
        ShiftedInverse(_small_cylinder(), 2.0)


def test_exceptional_tau_detected_and_retried() -> None:
    """A periodic cylinder is singular at t = sqrt(mu); a nudge recovers."""
    cyl = _small_cylinder(X1Closure.PERIODIC)
    roots = np.sqrt(np.clip(cyl.basis.eigenvalues, 0.0, None))
    exceptional = float(roots[roots >= 4.0][0])

    with pytest.raises(ExceptionalTauError) as info:
        ShiftedInverse(cyl, exceptional)
    assert info.value.tau == pytest.approx(exceptional)

    inverse, used = solve_with_retry(lambda t: ShiftedInverse(cyl, t), exceptional)
    assert used > exceptional
    assert inverse.t == used


def test_solve_with_retry_gives_up_after_budget() -> None:
    """Retries beyond the budget should re-raise the last error."""
    calls: list[float] = []

    def always_exceptional(tau: float) -> None:
        calls.append(tau)
        raise ExceptionalTauError("singular", tau=tau, condition=1e16)

    with pytest.raises(ExceptionalTauError):
        solve_with_retry(always_exceptional, 8.0, max_retries=2)
    assert len(calls) == 3


@pytest.mark.slow
def test_g0_norm_ladder_scales_like_tau_power() -> None:
    """Norm slopes on the reference cylinder should sit near s - 1."""
    reports = g0_norm_ladder(ExtendedCylinder(), geometric_ladder(8.0, 2.0**0.5, 5))

    assert [r.quantity for r in reports] == ["G0.L2->H0", "G0.L2->H1", "G0.L2->H2"]
    for report, target in zip(reports, (-1.0, 0.0, 1.0), strict=True):
        assert report.slope is not None
        assert abs(report.slope - target) <= 0.15
        assert report.passed


def test_g0_norm_ladder_rejects_unresolved_ladder() -> None:
    """A ladder past the resolved transversal spectrum should raise."""
    with pytest.raises(ConfigError, match="resolved spectrum"):
        g0_norm_ladder(_small_cylinder(), geometric_ladder(8.0, 2.0**0.5, 5))


# =============================================================================
# TESTS: Mollification
# =============================================================================
def test_mollified_family_of_constant_is_zero() -> None:
    """A constant conductivity has phi = 0 at every tau."""
    grid = BoxGrid.cube(-1.0, 1.0, 41, 2)
    family = MollifiedFamily(DiagonalCalculus.euclidean(grid), np.ones((41, 41)))

    snap = family.snapshot(8.0)

    assert float(np.abs(snap.phi_tau).max()) == 0.0
    assert snap.scale == pytest.approx(1.0 / 8.0)


def test_mollified_family_kernel_sums_to_one() -> None:
    """The discrete mollifier should be normalized."""
    grid = BoxGrid.cube(-1.0, 1.0, 81, 2)
    family = MollifiedFamily(DiagonalCalculus.euclidean(grid), np.ones((81, 81)))

    assert family.kernel(16.0).sum() == pytest.approx(1.0)


def test_mollified_family_kernel_below_grid_spacing_warns(
    caplog: pytest.LogCaptureFixture,
) -> None:
    """A scale under the grid spacing collapses the kernel and logs a warning."""
    grid = BoxGrid.cube(-1.0, 1.0, 41, 2)
    family = MollifiedFamily(DiagonalCalculus.euclidean(grid), np.ones((41, 41)))

    with caplog.at_level(logging.WARNING, logger="geotomo"):
        kernel = family.kernel(64.0)

    np.testing.assert_array_equal(kernel, [[1.0]])
    assert "below the grid spacing" in caplog.text


def test_mollified_family_rejects_nonpositive_conductivity() -> None:
    """gamma <= 0 anywhere should raise DomainError."""
    grid = BoxGrid.cube(-1.0, 1.0, 9, 2)
    gamma = np.ones((9, 9))
    gamma[4, 4] = 0.0

    with pytest.raises(DomainError):
        MollifiedFamily(DiagonalCalculus.euclidean(grid), gamma)


def test_mollified_family_norms_cover_every_quantity() -> None:
    """norms() and targets() should name the same eight quantities."""
    grid = BoxGrid.cube(-1.0, 1.0, 41, 2)
    gamma = cusp_conductivity(grid, (0.0, 0.0), 0.8)
    family = MollifiedFamily(DiagonalCalculus.euclidean(grid), gamma, eta=0.1)

    norms = family.norms(8.0)

    assert set(norms) == set(QUANTITIES) == set(family.targets())
    assert all(np.isfinite(v) for v in norms.values())


def test_bump_conductivity_is_one_outside_support() -> None:
    """The smooth bump conductivity is one away from its center."""
    grid = BoxGrid.cube(-1.0, 1.0, 21, 2)

    gamma = bump_conductivity(grid, (0.0, 0.0), 0.3, amplitude=0.5)

    assert gamma[10, 10] == pytest.approx(1.5)
    assert gamma[0, 0] == 1.0


# =============================================================================
# TESTS: CGO
# =============================================================================
def test_cgo_params_reject_tau_below_minimum() -> None:
    """tau below tau_min should fail validation."""
    with pytest.raises(ValueError):
        CGOParams(tau=2.0)


def test_cgo_params_kappa_carries_sign() -> None:
    """kappa is sign times tau."""
    assert CGOParams(tau=8.0, sign=-1).kappa == -8.0


def test_conjugate_constant_conductivity_is_free() -> None:
    """For gamma = 1 the conjugated operator has no perturbation."""
    cyl = _small_cylinder()
    family = MollifiedFamily(cyl.calculus(), np.ones(cyl.shape))

    op = conjugate(cyl, family, 8.0)

    assert op.is_free
    assert op.t == -8.0
    assert PerturbedInverse(op).k_norm == 0.0


def test_build_cgo_rejects_center_inside_disc() -> None:
    """A polar center inside M0 should raise DomainError."""
    cyl = _small_cylinder()
    family = MollifiedFamily(cyl.calculus(), np.ones(cyl.shape))

    with pytest.raises(DomainError, match="outside M0"):
        build_cgo(CGOParams(tau=8.0, omega=(0.1, 0.0)), family, cyl)


def test_build_cgo_constant_conductivity() -> None:
    """The CGO for gamma = 1 assembles consistently from its parts."""
    cyl = _small_cylinder()
    family = MollifiedFamily(cyl.calculus(), np.ones(cyl.shape))

    solution = build_cgo(CGOParams(tau=8.0), family, cyl)

    np.testing.assert_allclose(solution.assemble(), solution.u)
    gap, remainder = solution.envelope_defect()
    assert gap <= remainder + 1e-12
    assert solution.norms[0] <= solution.norms[1] <= solution.norms[2]
    assert np.isfinite(solution.weak_residual)
    assert solution.params.tau >= 8.0


@pytest.mark.slow
def test_cgo_rate_reports_constant_conductivity() -> None:
    """For gamma = 1 the phase error stays bounded and the remainder decays."""
    cyl = ExtendedCylinder()
    family = MollifiedFamily(cyl.calculus(), np.ones(cyl.shape))
    taus = geometric_ladder(8.0, 2.0**0.5, 5)

    reports = cgo_rate_reports(CGOParams(tau=8.0), family, cyl, taus)

    assert [r.quantity for r in reports] == [
        "phase.L2",
        "r_tilde.H0",
        "r_tilde.H1",
        "r_tilde.H2",
    ]
    assert reports[0].passed
    assert reports[1].passed
