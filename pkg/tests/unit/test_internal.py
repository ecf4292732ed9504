"""Unit tests for serialization, worker control and logging helpers."""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import json
import logging
from pathlib import Path

# Third-party
import numpy as np
import pytest

# Project/Local
from geotomo import ConfigError
from geotomo._internal import dumps_json, get_logger, read_csv, write_csv
from geotomo._internal.logging import (
    configure_logging,
    disable_logging,
    log_check,
    reset_logging,
)
from geotomo._internal.parallel import map_chunks, split_rows, worker_count


# =============================================================================
# TESTS: JSON
# =============================================================================
def test_dumps_json_sorts_keys_and_converts_numpy() -> None:
    """dumps_json() should emit sorted keys and plain numbers."""
    text = dumps_json({"b": np.float64(0.5), "a": np.arange(3)})

    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [0, 1, 2], "b": 0.5}


def test_dumps_json_maps_nonfinite_to_strings() -> None:
    """Infinite and NaN floats should become strings so JSON stays strict."""
    data = json.loads(dumps_json([float("inf"), float("-inf"), float("nan")]))

    assert data == ["inf", "-inf", "nan"]


# =============================================================================
# TESTS: CSV
# =============================================================================
def test_write_csv_header_and_cells(tmp_path: Path) -> None:
    """write_csv() should write the JSON header, column row and cells."""
    path = write_csv(
        tmp_path / "rates.csv",
        {"tau": [8, 16], "ok": [True, False], "value": [0.1, 0.25]},
        {"suite": "cgo"},
    )

    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == '# {"suite": "cgo"}'
    assert lines[1] == "tau,ok,value"
    assert lines[2] == "8,1,0.10000000000000001"
    assert lines[3] == "16,0,0.25"


def test_write_csv_unequal_columns_raises(tmp_path: Path) -> None:
    """Columns of different lengths should raise ValueError."""
    with pytest.raises(ValueError, match="equal length"):
        write_csv(tmp_path / "bad.csv", {"a": [1.0, 2.0], "b": [1.0]})


def test_read_csv_returns_header_and_columns(tmp_path: Path) -> None:
    """read_csv() should decode what write_csv() wrote."""
    path = write_csv(tmp_path / "r.csv", {"tau": [8.0, 16.0]}, {"lam": 0.1})

    header, columns = read_csv(path)

    assert header == {"lam": 0.1}
    np.testing.assert_array_equal(columns["tau"], [8.0, 16.0])


def test_read_csv_without_header(tmp_path: Path) -> None:
    """The JSON header line should be optional."""
    path = tmp_path / "plain.csv"
    path.write_text("tau,u\n8,1\n16,0.5\n", encoding="utf-8")

    header, columns = read_csv(path)

    assert header == {}
    np.testing.assert_array_equal(columns["u"], [1.0, 0.5])


def test_read_csv_non_numeric_cell_raises(tmp_path: Path) -> None:
    """A non-numeric cell should raise ValueError."""
    path = tmp_path / "text.csv"
    path.write_text("tau,u\n8,abc\n", encoding="utf-8")

    with pytest.raises(ValueError, match="Non-numeric"):
        read_csv(path)


# =============================================================================
# TESTS: Workers
# =============================================================================
def test_worker_count_default_when_unset() -> None:
    """An unset GEOTOMO_THREADS should give the default."""
    assert worker_count(default=3) == 3


def test_worker_count_reads_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    """A positive integer in GEOTOMO_THREADS should be used."""
    monkeypatch.setenv("GEOTOMO_THREADS", "4")

    assert worker_count() == 4


def test_worker_count_rejects_invalid(monkeypatch: pytest.MonkeyPatch) -> None:
    """Zero or non-integer values should raise ConfigError."""
    monkeypatch.setenv("GEOTOMO_THREADS", "0")
    with pytest.raises(ConfigError):
        worker_count()

    monkeypatch.setenv("GEOTOMO_THREADS", "many")
    with pytest.raises(ConfigError):
        worker_count()


def test_map_chunks_keeps_order_on_threads() -> None:
    """Threaded mapping should return results in input order."""
    assert map_chunks(lambda k: k * k, list(range(6)), workers=3) == [
        0,
        1,
        4,
        9,
        16,
        25,
    ]


def test_split_rows_covers_range() -> None:
    """split_rows() should cover every row exactly once."""
    slices = split_rows(10, 3)

    covered = [i for s in slices for i in range(10)[s]]
    assert covered == list(range(10))
    assert split_rows(2, 8) == [slice(0, 1), slice(1, 2)]


# =============================================================================
# TESTS: Logging
# =============================================================================
def test_get_logger_is_namespaced() -> None:
    """get_logger() should return the named logger."""
    assert get_logger("geotomo.rates").name == "geotomo.rates"


def test_configure_logging_sets_level() -> None:
    """configure_logging() should set the package logger level."""
    configure_logging(logging.DEBUG)

    assert logging.getLogger("geotomo").level == logging.DEBUG


def test_get_logger_nests_foreign_names() -> None:
    """Names outside the package namespace become children of it."""
    assert get_logger("scratch").name == "geotomo.scratch"


def test_configure_logging_keeps_foreign_handlers() -> None:
    """Reconfiguring should swap only the package's own handler."""
    root = logging.getLogger("geotomo")
    extra = logging.NullHandler()
    root.addHandler(extra)
    try:
        configure_logging(logging.INFO)
        configure_logging(logging.DEBUG, verbose=True)

        assert extra in root.handlers
        assert len(root.handlers) == 2
    finally:
        root.removeHandler(extra)


def test_disable_logging_silences_package() -> None:
    """disable_logging() should drop even critical records."""
    disable_logging()

    assert not logging.getLogger("geotomo").isEnabledFor(logging.CRITICAL)


def test_reset_logging_restores_unset_level() -> None:
    """reset_logging() should remove the handler and the level."""
    configure_logging(logging.DEBUG)

    reset_logging()

    root = logging.getLogger("geotomo")
    assert root.level == logging.NOTSET
    assert root.handlers == []


def test_log_check_failure_is_a_warning(capsys: pytest.CaptureFixture[str]) -> None:
    """A failed check should reach stderr at the default level."""
    log_check(get_logger("geotomo.test"), "stub.value", 2.0, 1.0, passed=False)

    err = capsys.readouterr().err
    assert "check=stub.value pass=False value=2 target=1" in err
