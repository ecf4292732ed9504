"""Unit tests for configuration, suite dispatch, rate plots and the CLI."""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import json
from pathlib import Path

# Third-party
import pytest

# Project/Local
from geotomo import ConfigError, DomainError, Suite
from geotomo.constants import THREADS_ENV_VAR
from geotomo.context import SuiteContext
from geotomo.harness import (
    SUITES,
    ExperimentConfig,
    default_config,
    load_config,
    main,
    rate_columns,
    rate_plot_script,
    run_suite,
    with_environment,
)
from geotomo.rates import rate_report


# =============================================================================
# HELPERS
# =============================================================================
def _write_config(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "experiment.toml"
    path.write_text(text, encoding="utf-8")
    return path


def _passing_suite(ctx: SuiteContext, config: ExperimentConfig) -> None:
    ctx.check_le("stub.value", 0.5, 1.0)


def _failing_suite(ctx: SuiteContext, config: ExperimentConfig) -> None:
    ctx.check_le("stub.value", 2.0, 1.0)


def _aborting_suite(ctx: SuiteContext, config: ExperimentConfig) -> None:
    msg = "stub left the chart"
    raise DomainError(msg)


# =============================================================================
# TESTS: Configuration
# =============================================================================
def test_load_config_reads_sections(tmp_path: Path) -> None:
    """Values from TOML should override the defaults section by section."""
    path = _write_config(
        tmp_path,
        'seed = 7\n[chart]\nkind = "spherical_cap"\nradius = 0.8\n'
        "[ray]\nn_angles = 12\n",
    )

    config = load_config(path)

    assert config.seed == 7
    assert config.chart.radius == 0.8
    assert config.ray.n_angles == 12
    assert config.grid == default_config().grid


def test_load_config_rejects_invalid_toml(tmp_path: Path) -> None:
    """A file that is not TOML should raise ConfigError."""
    path = _write_config(tmp_path, "seed = = 3\n")

    with pytest.raises(ConfigError, match="not valid TOML"):
        load_config(path)


def test_load_config_rejects_unknown_keys(tmp_path: Path) -> None:
    """Unknown keys should fail validation."""
    path = _write_config(tmp_path, "[ray]\nbogus = 1\n")

    with pytest.raises(ConfigError, match="Invalid config"):
        load_config(path)


def test_load_config_rejects_short_ladder(tmp_path: Path) -> None:
    """A CGO ladder with fewer than five points is invalid."""
    path = _write_config(tmp_path, "[cgo]\ntaus = [8.0, 16.0, 32.0]\n")

    with pytest.raises(ConfigError):
        load_config(path)


def test_load_config_rejects_attenuation_outside_regime(tmp_path: Path) -> None:
    """Attenuations beyond lambda_max should fail validation."""
    path = _write_config(tmp_path, "[ray]\nlambda_max = 0.1\nlambdas = [0.0, 0.5]\n")

    with pytest.raises(ConfigError, match="exceed lambda_max"):
        load_config(path)


def test_load_config_rejects_eta_prime_below_eta(tmp_path: Path) -> None:
    """The cusp regularity eta_prime must exceed the rate exponent eta."""
    path = _write_config(tmp_path, "[cgo]\neta = 0.5\neta_prime = 0.3\n")

    with pytest.raises(ConfigError, match="must exceed eta"):
        load_config(path)


def test_load_config_missing_file_raises(tmp_path: Path) -> None:
    """A missing file should raise ConfigError."""
    with pytest.raises(ConfigError, match="Cannot read"):
        load_config(tmp_path / "absent.toml")


def test_with_environment_reads_thread_count(monkeypatch: pytest.MonkeyPatch) -> None:
    """GEOTOMO_THREADS should fill in the worker cap."""
    monkeypatch.setenv(THREADS_ENV_VAR, "3")

    assert with_environment(default_config()).threads == 3


def test_with_environment_defaults_to_one_thread() -> None:
    """Without the variable the run is single-threaded."""
    assert with_environment(default_config()).threads == 1


def test_with_environment_rejects_invalid_thread_count(
    monkeypatch: pytest.MonkeyPatch,
) -> None:
    """A non-numeric GEOTOMO_THREADS should raise ConfigError."""
    monkeypatch.setenv(THREADS_ENV_VAR, "lots")

    with pytest.raises(ConfigError):
        with_environment(default_config())


# =============================================================================
# TESTS: Rate plots
# =============================================================================
def test_rate_columns_share_ladder() -> None:
    """rate_columns() should put tau first and one column per report."""
    taus = [8.0, 16.0, 32.0, 64.0]
    first = rate_report("a", taus, [1.0, 0.5, 0.25, 0.125], -1.0)
    second = rate_report("b", taus, [1.0, 1.0, 1.0, 1.0], 0.0)

    columns = rate_columns([first, second])

    assert list(columns) == ["tau", "a", "b"]
    assert columns["tau"] == taus


def test_rate_columns_reject_mixed_ladders() -> None:
    """Reports on different ladders cannot share a table."""
    first = rate_report("a", [8.0, 16.0, 32.0, 64.0], [1.0, 0.5, 0.25, 0.125], -1.0)
    second = rate_report("b", [4.0, 8.0, 16.0, 32.0], [1.0, 0.5, 0.25, 0.125], -1.0)

    with pytest.raises(ValueError, match="different tau ladder"):
        rate_columns([first, second])


def test_rate_plot_script_names_every_series(tmp_path: Path) -> None:
    """The gnuplot script should plot each column with its slope."""
    report = rate_report("decay", [8.0, 16.0, 32.0, 64.0], [8.0, 4.0, 2.0, 1.0], -1.0)

    script = rate_plot_script(tmp_path / "rates.csv", [report])

    text = script.read_text(encoding="utf-8")
    assert script.name == "rates.gp"
    assert "using 1:2" in text
    assert "decay (slope -1.000, target -1)" in text
    assert '"rates.png"' in text


# =============================================================================
# TESTS: Suite dispatch
# =============================================================================
def test_run_suite_writes_report(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    """A passing suite exits 0 and writes <suite>.json."""
    monkeypatch.setitem(SUITES, Suite.GEOMETRY, _passing_suite)

    outcome = run_suite(default_config(), Suite.GEOMETRY, tmp_path)

    assert outcome.exit_code == 0
    assert outcome.report_path == tmp_path / "geometry.json"
    payload = json.loads(outcome.report_path.read_text())
    assert payload["suite"] == "geometry"
    assert payload["pass"] is True
    assert [c["name"] for c in payload["checks"]] == ["stub.value"]


def test_run_suite_failed_check_exits_one(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    """A failed check should set exit code 1 and name the failure."""
    monkeypatch.setitem(SUITES, Suite.GEOMETRY, _failing_suite)

    outcome = run_suite(default_config(), Suite.GEOMETRY, tmp_path)

    assert outcome.exit_code == 1
    assert outcome.failures == ["stub.value"]


def test_run_suite_records_numerical_abort(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    """A numerical error inside a suite becomes a failed <suite>.error check."""
    monkeypatch.setitem(SUITES, Suite.GEOMETRY, _aborting_suite)

    outcome = run_suite(default_config(), Suite.GEOMETRY, tmp_path)

    assert outcome.exit_code == 1
    assert outcome.failures == ["geometry.error"]


@pytest.mark.slow
def test_geometry_suite_on_default_disc(tmp_path: Path) -> None:
    """The geometry suite should record its checks and the trace artifact."""
    outcome = run_suite(default_config(), Suite.GEOMETRY, tmp_path)

    names = {c["name"] for c in outcome.report["checks"]}
    assert {"geometry.simplicity", "geometry.diameter_exit_time"} <= names
    assert "geodesic_trace.csv" in outcome.report["artifacts"]
    assert outcome.report_path.exists()


@pytest.mark.slow
@pytest.mark.parametrize("suite", [s for s in Suite if s is not Suite.ALL])
def test_suite_passes_on_default_config(tmp_path: Path, suite: Suite) -> None:
    """Every suite should pass all of its checks at the default config."""
    outcome = run_suite(default_config(), suite, tmp_path)

    assert outcome.exit_code == 0, outcome.failures


# =============================================================================
# TESTS: Command line
# =============================================================================
def test_cli_run_passing_suite(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]
) -> None:
    """`run` should exit 0 and print where the report went."""
    monkeypatch.setitem(SUITES, Suite.GEOMETRY, _passing_suite)

    code = main(["run", "--suite", "geometry", "--out", str(tmp_path)])

    assert code == 0
    assert "passed" in capsys.readouterr().out
    assert (tmp_path / "geometry.json").exists()


def test_cli_run_failing_suite(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]
) -> None:
    """`run` should exit 1 and list failed checks on stderr."""
    monkeypatch.setitem(SUITES, Suite.GEOMETRY, _failing_suite)

    code = main(["run", "--suite", "geometry", "--out", str(tmp_path)])

    assert code == 1
    assert "FAILED stub.value" in capsys.readouterr().err


def test_cli_run_unknown_suite_is_usage_error() -> None:
    """An unknown suite name should exit 2."""
    assert main(["run", "--suite", "nonsense"]) == 2


def test_cli_run_bad_config_is_usage_error(tmp_path: Path) -> None:
    """An invalid configuration file should exit 2."""
    path = _write_config(tmp_path, "[ray]\nbogus = 1\n")

    assert main(["run", "--config", str(path), "--suite", "geometry"]) == 2


def test_cli_run_seed_override(
    tmp_path: Path, monkeypatch: pytest.MonkeyPatch
) -> None:
    """--seed should replace the configured seed."""
    seen: list[int] = []

    def record_seed(ctx: SuiteContext, config: ExperimentConfig) -> None:
        seen.append(config.seed)

    monkeypatch.setitem(SUITES, Suite.GEOMETRY, record_seed)

    main(["run", "--suite", "geometry", "--out", str(tmp_path), "--seed", "11"])

    assert seen == [11]


def test_cli_fit_prints_slopes(
    tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    """`fit` should print one JSON row per value column."""
    csv_path = tmp_path / "rates.csv"
    csv_path.write_text("tau,decay\n8,8\n16,4\n32,2\n64,1\n", encoding="utf-8")

    code = main(["fit", "--csv", str(csv_path)])

    assert code == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows[0]["quantity"] == "decay"
    assert rows[0]["slope"] == pytest.approx(-1.0)
    assert rows[0]["n_points"] == 4


def test_cli_fit_needs_value_column(tmp_path: Path) -> None:
    """A CSV with only a tau column should exit 2."""
    csv_path = tmp_path / "rates.csv"
    csv_path.write_text("tau\n8\n16\n", encoding="utf-8")

    assert main(["fit", "--csv", str(csv_path)]) == 2


def test_cli_fit_missing_file(tmp_path: Path) -> None:
    """A missing CSV should exit 2."""
    assert main(["fit", "--csv", str(tmp_path / "absent.csv")]) == 2
