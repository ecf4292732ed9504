"""Unit tests for the Carleman divergence identity and estimate bookkeeping."""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from typing import Any

# Third-party
import numpy as np
import pytest

# Project/Local
from geotomo import ConfigError, DomainError
from geotomo.carleman import (
    BOUNDARY_TERMS,
    DEFAULT_CANDIDATES,
    DIVERGENCE_TOLERANCE,
    CarlemanConstants,
    boundary_dominance_ratio,
    calibrate_constants,
    carleman_family,
    carleman_reports,
    divergence_identity_check,
    divergence_refinement_order,
    estimate_check,
    segment_grid,
)
from geotomo.constants import (
    CARLEMAN_C_DOUBLE_PRIME,
    CARLEMAN_C_PRIME,
    CARLEMAN_TAUS,
)
from geotomo.grids import BoxGrid, DiagonalCalculus


# =============================================================================
# HELPERS
# =============================================================================
def _small_grid() -> BoxGrid:
    return segment_grid((17, 9, 9))


def _edge_gaussian(grid: BoxGrid) -> Any:
    x1, x2, x3 = grid.mesh()
    return np.exp(-((x1 - 1.0) ** 2) / 0.005) * np.exp(-(x2**2 + x3**2) / 0.02)


# =============================================================================
# TESTS: Divergence identity
# =============================================================================
def test_segment_grid_spans_unit_segment() -> None:
    """The x1 axis runs over [0, 1] and the cross-section is centered."""
    grid = segment_grid((9, 5))

    assert grid.lower == (0.0, -0.5)
    assert grid.upper == (1.0, 0.5)


def test_divergence_identity_exact_for_linear_function() -> None:
    """For v = x1 all three routes give 2 tau^3."""
    grid = segment_grid((17, 9))
    x1, _ = grid.mesh()

    check = divergence_identity_check(DiagonalCalculus.euclidean(grid), x1, 2.0)

    assert check.vol == pytest.approx(16.0)
    assert check.surf == pytest.approx(16.0)
    assert check.left == pytest.approx(16.0)
    assert check.rel_err <= 1e-10


def test_divergence_identity_converges_under_refinement() -> None:
    """The identity defect should decay at least quadratically."""

    def smooth(x1: Any, x2: Any, x3: Any) -> Any:
        return np.exp(0.5 * x1 + 1j * x2) * np.cos(x3)

    errors, order = divergence_refinement_order(_small_grid(), smooth, 8.0)

    assert len(errors) == 3
    assert order >= 1.8


def test_divergence_identity_requires_product_metric() -> None:
    """A warped x1 metric component should raise DomainError."""
    grid = segment_grid((9, 5))
    calc = DiagonalCalculus.from_function(
        grid, lambda x1, x2: [np.exp(x1), np.ones_like(x2)]
    )

    with pytest.raises(DomainError, match="must be one"):
        divergence_identity_check(calc, np.ones(grid.shape), 1.0)


@pytest.mark.parametrize("tau", [2.0, 8.0])
def test_divergence_identity_smooth_field_within_tolerance(tau: float) -> None:
    """A resolved smooth field should meet the 1e-4 identity tolerance."""
    grid = segment_grid()
    x1, x2, x3 = grid.mesh()
    v = np.exp(0.5 * x1 + 1j * x2) * np.cos(x3)

    check = divergence_identity_check(DiagonalCalculus.euclidean(grid), v, tau)

    assert check.rel_err <= DIVERGENCE_TOLERANCE


# =============================================================================
# TESTS: Test family
# =============================================================================
def test_carleman_family_is_seeded() -> None:
    """The same seed should reproduce the same members."""
    grid = _small_grid()

    first = carleman_family(grid, 4, seed=7)
    second = carleman_family(grid, 4, seed=7)

    assert len(first) == 4
    for a, b in zip(first, second, strict=True):
        np.testing.assert_array_equal(a, b)


def test_carleman_family_alternates_interior_and_boundary_members() -> None:
    """Even members vanish on the boundary; odd members carry boundary mass."""
    grid = _small_grid()
    mask = grid.boundary_mask()

    family = carleman_family(grid, 4, seed=11)

    assert not np.any(family[0][mask])
    assert np.any(np.abs(family[1][mask]) > 0.0)


# =============================================================================
# TESTS: Estimate
# =============================================================================
def test_estimate_check_interior_member_has_no_trace_terms() -> None:
    """A function vanishing on the boundary has zero trace and flux terms."""
    grid = _small_grid()
    v = carleman_family(grid, 2, seed=5)[0]

    report = estimate_check(DiagonalCalculus.euclidean(grid), v, 8.0)

    assert set(report.boundary_terms) == set(BOUNDARY_TERMS)
    assert report.boundary_terms["trace"] == 0.0
    assert report.boundary_terms["flux"] == 0.0
    assert report.lhs == pytest.approx(
        report.interior_lhs + sum(report.boundary_terms.values())
    )
    assert report.slack == pytest.approx(report.rhs - report.lhs)


def test_estimate_check_trace_constant_lowers_left_side() -> None:
    """Raising C' should subtract C' tau^2 times the boundary mass."""
    grid = _small_grid()
    calc = DiagonalCalculus.euclidean(grid)
    v = carleman_family(grid, 2, seed=5)[1]

    low = estimate_check(calc, v, 8.0, constants=CarlemanConstants(c_prime=1.0))
    high = estimate_check(calc, v, 8.0, constants=CarlemanConstants(c_prime=2.0))

    assert high.lhs < low.lhs
    assert high.boundary_terms["trace"] == pytest.approx(
        2.0 * low.boundary_terms["trace"]
    )
    assert high.rhs == pytest.approx(low.rhs)


def test_estimate_check_reports_violation_without_raising() -> None:
    """An absurd interior constant should fail the report, not raise."""
    grid = _small_grid()
    v = carleman_family(grid, 2, seed=5)[0]

    report = estimate_check(
        DiagonalCalculus.euclidean(grid), v, 8.0, constants=CarlemanConstants(c=1e8)
    )

    assert not report.passed
    assert report.slack < 0.0
    assert report.as_row()["pass"] is False


def test_estimate_check_smallness_of_potential() -> None:
    """smallness should be ||q||_inf^2 / tau^2 for a potential alone."""
    grid = _small_grid()
    v = carleman_family(grid, 2, seed=5)[0]
    q = np.full(grid.shape, 2.0)

    report = estimate_check(DiagonalCalculus.euclidean(grid), v, 8.0, q=q)

    assert report.smallness == pytest.approx(4.0 / 64.0)


def test_calibrate_constants_without_candidates_raises() -> None:
    """An empty candidate list cannot satisfy the estimate."""
    grid = _small_grid()
    calc = DiagonalCalculus.euclidean(grid)
    family = carleman_family(grid, 2, seed=5)

    with pytest.raises(ConfigError, match="No candidate pair"):
        calibrate_constants(calc, family, (8.0,), candidates=())


@pytest.mark.slow
def test_calibrate_constants_recovers_frozen_constants_on_family() -> None:
    """Calibration over the default family should not exceed the frozen pair."""
    grid = segment_grid()
    calc = DiagonalCalculus.euclidean(grid)
    family = carleman_family(grid)

    constants = calibrate_constants(calc, family, CARLEMAN_TAUS)

    assert CARLEMAN_C_DOUBLE_PRIME in DEFAULT_CANDIDATES
    assert constants.c_prime + constants.c_double_prime <= (
        CARLEMAN_C_PRIME + CARLEMAN_C_DOUBLE_PRIME
    )
    reports = carleman_reports(calc, family, CARLEMAN_TAUS, constants)
    assert all(r.passed for r in reports)


# =============================================================================
# TESTS: Boundary dominance
# =============================================================================
def test_boundary_dominance_ratio_grows_linearly_in_tau() -> None:
    """On the x1 = 1 face the ratio is 2 tau / C'."""
    grid = _small_grid()
    calc = DiagonalCalculus.euclidean(grid)
    v = _edge_gaussian(grid)

    ratios = [boundary_dominance_ratio(calc, v, tau, 0.05, 4.0) for tau in (8, 16)]

    assert ratios == pytest.approx([4.0, 8.0])


def test_boundary_dominance_ratio_needs_boundary_mass() -> None:
    """A function vanishing on the boundary should raise DomainError."""
    grid = _small_grid()
    v = carleman_family(grid, 2, seed=5)[0]

    with pytest.raises(DomainError, match="no mass"):
        boundary_dominance_ratio(DiagonalCalculus.euclidean(grid), v, 8.0)
