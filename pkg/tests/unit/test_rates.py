"""Unit tests for log-log rate fitting and tau ladders."""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Third-party
import pytest

# Project/Local
from geotomo import (
    ConfigError,
    RateFitError,
    check_ladder,
    fit_slope,
    geometric_ladder,
    rate_report,
)

TAUS = geometric_ladder(8.0, 2.0, 5)


# =============================================================================
# TESTS: fit_slope
# =============================================================================
def test_fit_slope_recovers_exact_power_law() -> None:
    """A clean power law should give its exponent with a vanishing band."""
    slope, band = fit_slope(TAUS, [3.0 * t**-0.5 for t in TAUS])

    assert slope == pytest.approx(-0.5, abs=1e-12)
    assert band == pytest.approx(0.0, abs=1e-9)


def test_fit_slope_band_widens_with_noise() -> None:
    """Scatter around the power law should give a positive band."""
    noise = [1.0, 1.2, 0.9, 1.1, 0.95]
    slope, band = fit_slope(TAUS, [n / t for n, t in zip(noise, TAUS, strict=True)])

    assert slope == pytest.approx(-1.0, abs=0.2)
    assert band > 0.0


def test_fit_slope_drops_nonpositive_values() -> None:
    """Zero entries should be dropped, leaving a fit on the positive ones."""
    values = [0.0] + [t**-1.0 for t in TAUS[1:]]
    slope, _ = fit_slope(TAUS, values)

    assert slope == pytest.approx(-1.0, abs=1e-12)


def test_fit_slope_too_few_points_raises() -> None:
    """Fewer than four positive values should raise RateFitError."""
    with pytest.raises(RateFitError, match="at least 4"):
        fit_slope(TAUS[:3], [1.0, 0.5, 0.25])


def test_fit_slope_length_mismatch_raises() -> None:
    """Ladders and values of different lengths should raise RateFitError."""
    with pytest.raises(RateFitError):
        fit_slope(TAUS, [1.0, 2.0])


# =============================================================================
# TESTS: rate_report
# =============================================================================
def test_rate_report_passes_within_slack() -> None:
    """A slope just above the target but within the slack should pass."""
    report = rate_report("u", TAUS, [t**-0.45 for t in TAUS], target=-0.5)

    assert report.passed
    assert report.slope == pytest.approx(-0.45)
    assert report.note == ""


def test_rate_report_fails_above_slack() -> None:
    """A slope beyond target plus slack should fail with a note."""
    report = rate_report("u", TAUS, [t**-0.2 for t in TAUS], target=-0.5)

    assert not report.passed
    assert "exceeds" in report.note


def test_rate_report_all_zero_passes_trivially() -> None:
    """Identically vanishing values should pass without a slope."""
    report = rate_report("r", TAUS, [0.0] * len(TAUS), target=-1.0)

    assert report.passed
    assert report.slope is None
    assert report.note == "all values vanish"


def test_rate_report_vanishing_tail_passes() -> None:
    """Values that drop to zero after decaying should pass without a slope."""
    report = rate_report("r", TAUS, [1e-3, 4e-4, 0.0, 0.0, 0.0], target=-0.2)

    assert report.passed
    assert report.slope is None
    assert report.note == "vanishes from tau=32"


def test_rate_report_growth_before_vanishing_fails() -> None:
    """A ladder that rises before dropping to zero should fail."""
    report = rate_report("r", TAUS, [1e-3, 2e-3, 5e-3, 0.0, 0.0], target=-0.2)

    assert not report.passed
    assert report.note == "values grow before vanishing"


def test_rate_report_floor_treats_small_values_as_zero() -> None:
    """Values under a custom floor should count as vanishing."""
    report = rate_report("r", TAUS, [1e-9, 3e-10, 2e-9, 1e-10, 0.0], 0.0, floor=1e-8)

    assert report.passed
    assert report.note == "all values vanish"


def test_rate_report_non_monotone_decay_fails() -> None:
    """A decaying target should reject ladders that rise anywhere."""
    values = [1.0, 0.5, 0.6, 0.1, 0.05]
    report = rate_report("r", TAUS, values, target=-1.0, slack=5.0)

    assert not report.passed
    assert "monotone" in report.note


def test_rate_report_lower_slack_rejects_steep_slope() -> None:
    """With a lower slack the slope must not fall far below the target."""
    report = rate_report(
        "u", TAUS, [t**-2.0 for t in TAUS], target=-0.5, lower_slack=0.5
    )

    assert not report.passed
    assert "below" in report.note


def test_rate_report_short_ladder_fails_without_raising() -> None:
    """A fit failure should surface as a failed report."""
    report = rate_report("u", TAUS[:2], [1.0, 0.5], target=-0.5)

    assert not report.passed
    assert report.slope is None


def test_rate_report_as_row_has_pass_key() -> None:
    """as_row() should expose the verdict under 'pass'."""
    row = rate_report("u", TAUS, [t**-1.0 for t in TAUS], target=-1.0).as_row()

    assert row["quantity"] == "u"
    assert row["pass"] is True


# =============================================================================
# TESTS: Ladders
# =============================================================================
def test_geometric_ladder_values() -> None:
    """geometric_ladder() should multiply by the ratio at every step."""
    assert geometric_ladder(2.0, 3.0, 3) == (2.0, 6.0, 18.0)


def test_check_ladder_accepts_sqrt_two_ratio() -> None:
    """A ratio of sqrt(2) is the smallest accepted growth."""
    ladder = geometric_ladder(8.0, 2.0**0.5, 5)

    assert check_ladder(ladder) == ladder


def test_check_ladder_rejects_short_ladder() -> None:
    """Fewer than five points should be a configuration error."""
    with pytest.raises(ConfigError, match="at least 5"):
        check_ladder((1.0, 2.0, 4.0, 8.0))


def test_check_ladder_rejects_non_geometric() -> None:
    """Uneven ratios should be a configuration error."""
    with pytest.raises(ConfigError, match="not geometric"):
        check_ladder((1.0, 2.0, 4.0, 8.0, 20.0))


def test_check_ladder_rejects_slow_growth() -> None:
    """A ratio below sqrt(2) should be a configuration error."""
    with pytest.raises(ConfigError, match="below"):
        check_ladder(geometric_ladder(8.0, 1.2, 5))


def test_check_ladder_rejects_nonpositive() -> None:
    """Nonpositive taus should be a configuration error."""
    with pytest.raises(ConfigError, match="positive"):
        check_ladder((0.0, 1.0, 2.0, 4.0, 8.0))
