"""Pytest configuration and shared fixtures."""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from collections.abc import Generator

# Third-party
import pytest

# Project/Local
from geotomo._internal.logging import reset_logging
from geotomo.constants import THREADS_ENV_VAR
from geotomo.geometry import ConformalDisc


# =============================================================================
# FIXTURES
# =============================================================================
@pytest.fixture(autouse=True)
def reset_logging_fixture() -> Generator[None, None, None]:
    """Start and end every test without the package log handler."""
    reset_logging()
    yield
    reset_logging()


@pytest.fixture(autouse=True)
def single_thread(monkeypatch: pytest.MonkeyPatch) -> None:
    """Run every test with one worker unless it sets GEOTOMO_THREADS itself."""
    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)


@pytest.fixture
def unit_disc() -> ConformalDisc:
    """The Euclidean unit disc."""
    return ConformalDisc(radius=1.0)


@pytest.fixture
def spherical_cap() -> ConformalDisc:
    """A unit-radius chart of the round sphere (curvature one)."""
    return ConformalDisc(radius=1.0, curvature=1.0)
