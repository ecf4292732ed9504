"""Unit tests for SuiteContext check recording."""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from pathlib import Path

# Third-party
import pytest

# Project/Local
from geotomo import SuiteContext, geometric_ladder, rate_report


# =============================================================================
# TESTS: Recording
# =============================================================================
def test_context_check_le_records_pass() -> None:
    """check_le() should pass when the value is within the bound."""
    ctx = SuiteContext("geometry")

    assert ctx.check_le("exit_err", 1e-12, 1e-8)
    assert ctx.get("exit_err").target == 1e-8
    assert ctx.passed


def test_context_check_ge_records_failure() -> None:
    """check_ge() should fail and list the name among failures."""
    ctx = SuiteContext("raytransform")

    assert not ctx.check_ge("largest_stable", 0.05, 0.1)
    assert ctx.failures == ["largest_stable"]
    assert not ctx.passed


def test_context_check_close_uses_tolerance() -> None:
    """check_close() should compare the absolute difference with tol."""
    ctx = SuiteContext("santalo")

    assert ctx.check_close("constant", 1.0005, 1.0, 1e-3)
    assert not ctx.check_close("constant.strict", 1.0005, 1.0, 1e-4)


def test_context_nonfinite_value_fails() -> None:
    """A NaN measurement should never count as a pass."""
    ctx = SuiteContext("cgo")

    assert not ctx.record("residual", float("nan"), 0.0, 1.0, True)


def test_context_reused_name_replaces_entry() -> None:
    """Recording a name twice should keep only the latest result."""
    ctx = SuiteContext("forward")
    ctx.check_true("dn.symmetric", False)
    ctx.check_true("dn.symmetric", True)

    assert len(ctx.checks) == 1
    assert ctx.passed


def test_context_record_rate_prefixes_name() -> None:
    """record_rate() should store the report and a 'rate.' check."""
    taus = geometric_ladder(8.0, 2.0, 5)
    ctx = SuiteContext("cgo")
    ctx.record_rate(rate_report("r_norm", taus, [t**-1.0 for t in taus], -1.0))

    assert ctx.get("rate.r_norm").passed
    assert [r.quantity for r in ctx.rates] == ["r_norm"]


# =============================================================================
# TESTS: Inspection
# =============================================================================
def test_context_get_missing_raises_key_error() -> None:
    """get() should raise KeyError for unknown checks."""
    with pytest.raises(KeyError):
        SuiteContext("g0").get("missing")


def test_context_assert_check_reports_values() -> None:
    """assert_check() should raise with expected and actual values."""
    ctx = SuiteContext("carleman")
    ctx.check_le("violations", 3.0, 0.0)

    with pytest.raises(AssertionError, match="Actual:   3.0"):
        ctx.assert_check("violations")


def test_context_report_payload() -> None:
    """report() should carry suite, checks, sorted artifacts and verdict."""
    ctx = SuiteContext("mollify")
    ctx.check_true("ok", True)
    ctx.add_artifact(Path("out/b.csv"))
    ctx.add_artifact(Path("out/a.csv"))

    report = ctx.report(1.5)

    assert report["suite"] == "mollify"
    assert report["artifacts"] == ["a.csv", "b.csv"]
    assert report["checks"] == [
        {"name": "ok", "value": None, "target": None, "tol": None, "pass": True}
    ]
    assert report["wallclock_s"] == 1.5
    assert report["pass"] is True
