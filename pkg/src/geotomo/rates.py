"""Log-log rate regression.

Every asymptotic claim checked by geotomo (``O(tau^p)``, ``o(tau^p)``) is
turned into a ``RateReport``: a least-squares slope of ``log value`` against
``log tau`` compared with the target exponent plus a slack.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from collections.abc import Sequence

# Third-party
import numpy as np
import scipy.stats
from pydantic import Field
from pydantic.dataclasses import dataclass

# Project/Local
from ._internal import get_logger
from .constants import (
    CONFIDENCE_LEVEL,
    MIN_LADDER_POINTS,
    MIN_LADDER_RATIO,
    MIN_RATE_POINTS,
    RATE_SLACK,
    ZERO_NORM_THRESHOLD,
)
from .exceptions import ConfigError, RateFitError

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)


# =============================================================================
# CORE CLASSES
# =============================================================================


@dataclass(frozen=True)
class RateReport:
    """One fitted rate and its verdict.

    Attributes:
        quantity: Name of the measured norm.
        taus: Ladder parameters.
        values: Measured values, one per ladder point.
        slope: Fitted log-log slope (None when every value vanishes).
        band: Half-width of the confidence band on the slope.
        target: Exponent the slope must not exceed.
        slack: Allowed excess over the target.
        passed: Verdict.
        note: Reason for a failure or a trivial pass.
    """

    quantity: str
    taus: tuple[float, ...]
    values: tuple[float, ...]
    slope: float | None
    band: float
    target: float
    slack: float = Field(default=RATE_SLACK, ge=0.0)
    passed: bool = False
    note: str = ""

    def as_row(self) -> dict[str, object]:
        """Flat mapping for JSON and CSV reports."""
        return {
            "quantity": self.quantity,
            "slope": self.slope,
            "band": self.band,
            "target": self.target,
            "slack": self.slack,
            "pass": self.passed,
            "note": self.note,
        }


# =============================================================================
# PUBLIC API
# =============================================================================


def fit_slope(
    taus: Sequence[float],
    values: Sequence[float],
    confidence: float = CONFIDENCE_LEVEL,
) -> tuple[float, float]:
    """Least-squares slope of ``log value`` against ``log tau``.

    Nonpositive values are dropped with a warning.

    Args:
        taus: Positive ladder parameters.
        values: Measured values.
        confidence: Two-sided confidence level of the band.

    Returns:
        ``(slope, band)`` where ``band`` is the half-width of the confidence
        interval from the slope's standard error.

    Raises:
        RateFitError: If fewer than four positive values remain or the
            inputs have different lengths.

    Examples:
        >>> taus = [4.0, 8.0, 16.0, 32.0]
        >>> slope, band = fit_slope(taus, [1.0 / t for t in taus])
        >>> round(slope, 6), round(band, 6)
        (-1.0, 0.0)
    """
    t = np.asarray(taus, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape:
        msg = f"Ladder has {t.size} parameters but {v.size} values"
        raise RateFitError(msg)
    keep = (v > 0.0) & np.isfinite(v) & (t > 0.0)
    dropped = int((~keep).sum())
    if dropped:
        logger.warning("Dropping %d nonpositive values from rate fit", dropped)
    if int(keep.sum()) < MIN_RATE_POINTS:
        msg = (
            f"Rate fit needs at least {MIN_RATE_POINTS} positive values, "
            f"got {int(keep.sum())}"
        )
        raise RateFitError(msg)

    fit = scipy.stats.linregress(np.log(t[keep]), np.log(v[keep]))
    dof = int(keep.sum()) - 2
    quantile = float(scipy.stats.t.ppf(0.5 + confidence / 2.0, dof))
    return float(fit.slope), float(quantile * fit.stderr)


def rate_report(
    quantity: str,
    taus: Sequence[float],
    values: Sequence[float],
    target: float,
    slack: float = RATE_SLACK,
    *,
    require_monotone: bool | None = None,
    lower_slack: float | None = None,
    floor: float = ZERO_NORM_THRESHOLD,
) -> RateReport:
    """Fit a ladder and judge it against ``slope <= target + slack``.

    A ladder whose values all vanish passes trivially. A one-sided ladder
    whose values vanish from some point on passes when it does not grow
    before that point. For decaying targets (``target < 0``) a ladder that
    increases anywhere fails. None of these cases raises.

    Args:
        quantity: Name of the measured norm.
        taus: Ladder parameters.
        values: Measured values.
        target: Exponent the slope must not exceed.
        slack: Allowed excess.
        require_monotone: Force or skip the monotonicity requirement
            (default: required when ``target < 0``).
        lower_slack: When given, the slope must also be at least
            ``target - lower_slack``.
        floor: Values at or below it count as vanishing.

    Returns:
        The report.
    """
    taus_t = tuple(float(x) for x in taus)
    values_t = tuple(float(x) for x in values)
    if values_t and all(abs(v) <= floor for v in values_t):
        return RateReport(
            quantity=quantity,
            taus=taus_t,
            values=values_t,
            slope=None,
            band=0.0,
            target=target,
            slack=slack,
            passed=True,
            note="all values vanish",
        )

    cut = _vanishing_tail(values_t, floor)
    if cut is not None and lower_slack is None:
        grows = bool(np.any(np.diff(np.asarray(values_t[:cut])) > 0.0))
        return RateReport(
            quantity=quantity,
            taus=taus_t,
            values=values_t,
            slope=None,
            band=0.0,
            target=target,
            slack=slack,
            passed=not grows,
            note=(
                "values grow before vanishing"
                if grows
                else f"vanishes from tau={taus_t[cut]:.4g}"
            ),
        )

    try:
        slope, band = fit_slope(taus_t, values_t)
    except RateFitError as exc:
        logger.warning("Rate fit for '%s' failed: %s", quantity, exc)
        return RateReport(
            quantity=quantity,
            taus=taus_t,
            values=values_t,
            slope=None,
            band=0.0,
            target=target,
            slack=slack,
            passed=False,
            note=str(exc),
        )

    monotone = require_monotone if require_monotone is not None else target < 0.0
    passed = slope <= target + slack
    note = ""
    if lower_slack is not None and slope < target - lower_slack:
        passed = False
        note = f"slope {slope:.3f} below {target - lower_slack:.3f}"
    if monotone and np.any(np.diff(np.asarray(values_t)) > 0.0):
        passed = False
        note = "values not monotone along the ladder"
    elif not passed and not note:
        note = f"slope {slope:.3f} exceeds {target + slack:.3f}"
    return RateReport(
        quantity=quantity,
        taus=taus_t,
        values=values_t,
        slope=slope,
        band=band,
        target=target,
        slack=slack,
        passed=passed,
        note=note,
    )


def geometric_ladder(start: float, ratio: float, count: int) -> tuple[float, ...]:
    """``start * ratio**k`` for ``k < count``."""
    return tuple(float(start * ratio**k) for k in range(count))


def check_ladder(
    taus: Sequence[float],
    min_points: int = MIN_LADDER_POINTS,
    min_ratio: float = MIN_LADDER_RATIO,
) -> tuple[float, ...]:
    """Validate a geometric tau ladder and return it as a tuple.

    Raises:
        ConfigError: If the ladder is too short, not positive, not geometric
            or grows by less than ``min_ratio`` per step.

    Examples:
        >>> check_ladder(geometric_ladder(4.0, 2.0, 5))
        (4.0, 8.0, 16.0, 32.0, 64.0)
    """
    ladder = tuple(float(t) for t in taus)
    if len(ladder) < min_points:
        msg = f"Tau ladder needs at least {min_points} points, got {len(ladder)}"
        raise ConfigError(msg)
    if any(t <= 0.0 for t in ladder):
        msg = f"Tau ladder must be positive, got {ladder}"
        raise ConfigError(msg)
    ratios = np.asarray(ladder[1:]) / np.asarray(ladder[:-1])
    if not np.allclose(ratios, ratios[0], rtol=1e-6):
        msg = f"Tau ladder is not geometric: ratios {np.round(ratios, 6).tolist()}"
        raise ConfigError(msg)
    if ratios[0] < min_ratio * (1.0 - 1e-9):
        msg = f"Tau ladder ratio {ratios[0]:.4g} is below {min_ratio:.4g}"
        raise ConfigError(msg)
    return ladder


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _vanishing_tail(values: Sequence[float], floor: float) -> int | None:
    """First index of a trailing run of vanishing values, if the run is proper."""
    cut = len(values)
    while cut > 0 and abs(values[cut - 1]) <= floor:
        cut -= 1
    return cut if 0 < cut < len(values) else None
