"""Check recording for experiment suites."""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

# Project/Local
from ._internal import get_logger, log_check
from .rates import RateReport

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# CORE CLASSES
# =============================================================================


@dataclass(frozen=True)
class CheckResult:
    """One named check and its outcome.

    Attributes:
        name: Check identifier, unique within a suite.
        value: Measured value.
        target: Value the measurement is compared with.
        tol: Tolerance used in the comparison.
        passed: Verdict.

    Example:
        >>> CheckResult("santalo.rel_err", 2e-5, 0.0, 1e-3, True).as_row()["pass"]
        True
    """

    name: str
    value: float | None
    target: float | None
    tol: float | None
    passed: bool

    def as_row(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "value": self.value,
            "target": self.target,
            "tol": self.tol,
            "pass": self.passed,
        }


class SuiteContext:
    """Collects the checks and artifacts produced while a suite runs.

    Checks are recorded explicitly; nothing is intercepted. The context is
    what the CLI turns into ``<suite>.json``.

    Example:
        >>> ctx = SuiteContext("geometry")
        >>> ctx.check_le("chord.exit_err", 3e-12, 1e-8)
        True
        >>> ctx.passed
        True
    """

    def __init__(self, suite: str, out_dir: Path | None = None) -> None:
        self.suite = suite
        self.out_dir = out_dir
        self._checks: dict[str, CheckResult] = {}
        self._rates: list[RateReport] = []
        self.artifacts: list[Path] = []

    # -- recording ----------------------------------------------------------

    def record(
        self,
        name: str,
        value: float | None,
        target: float | None,
        tol: float | None,
        passed: bool,
    ) -> bool:
        """Record a check; a re-used name replaces the earlier entry."""
        if name in self._checks:
            logger.debug("Replacing check '%s'", name)
        if value is not None and not math.isfinite(value):
            passed = False
        result = CheckResult(name, value, target, tol, bool(passed))
        self._checks[name] = result
        log_check(logger, name, value, target, result.passed)
        return result.passed

    def check_le(self, name: str, value: float, bound: float) -> bool:
        """Record ``value <= bound``."""
        return self.record(name, value, bound, 0.0, value <= bound)

    def check_ge(self, name: str, value: float, bound: float) -> bool:
        """Record ``value >= bound``."""
        return self.record(name, value, bound, 0.0, value >= bound)

    def check_close(self, name: str, value: float, target: float, tol: float) -> bool:
        """Record ``|value - target| <= tol``."""
        return self.record(name, value, target, tol, abs(value - target) <= tol)

    def check_true(self, name: str, condition: bool) -> bool:
        return self.record(name, None, None, None, condition)

    def record_rate(self, report: RateReport) -> bool:
        """Record a rate report as a slope check."""
        self._rates.append(report)
        return self.record(
            f"rate.{report.quantity}",
            report.slope,
            report.target,
            report.slack,
            report.passed,
        )

    def add_artifact(self, path: Path) -> None:
        self.artifacts.append(path)

    # -- inspection ---------------------------------------------------------

    @property
    def checks(self) -> list[CheckResult]:
        return list(self._checks.values())

    @property
    def rates(self) -> list[RateReport]:
        return list(self._rates)

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self._checks.values() if not c.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def get(self, name: str) -> CheckResult:
        """Look up a recorded check.

        Raises:
            KeyError: If no check with that name was recorded.
        """
        if name not in self._checks:
            msg = f"Check '{name}' was never recorded"
            raise KeyError(msg)
        return self._checks[name]

    def assert_check(self, name: str) -> None:
        """Assert that a recorded check passed.

        Raises:
            AssertionError: If the check is missing or failed.
        """
        if name not in self._checks:
            msg = f"Check '{name}' was never recorded"
            raise AssertionError(msg)
        result = self._checks[name]
        if not result.passed:
            msg = (
                f"Check '{name}' failed:\n"
                f"  Expected: {result.target!r} (tol {result.tol!r})\n"
                f"  Actual:   {result.value!r}"
            )
            raise AssertionError(msg)

    def report(self, wallclock_s: float) -> dict[str, Any]:
        """Report payload: ``{suite, checks, rates, artifacts, wallclock_s, pass}``."""
        return {
            "suite": self.suite,
            "checks": [c.as_row() for c in self._checks.values()],
            "rates": [r.as_row() for r in self._rates],
            "artifacts": sorted(p.name for p in self.artifacts),
            "wallclock_s": wallclock_s,
            "pass": self.passed,
        }
