"""Logging for geotomo: one handler on the ``geotomo`` logger, set up lazily.

Modules call :func:`get_logger` with ``__name__``. The first call installs a
stderr handler at WARNING so that library use stays quiet; the CLI raises or
silences it through :func:`configure_logging`, :func:`enable_debug_logging`
and :func:`disable_logging`.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import logging
import sys
from collections.abc import Mapping
from typing import Any

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
ROOT_LOGGER_NAME = "geotomo"
DEFAULT_LOG_LEVEL = logging.WARNING
QUIET_LEVEL = logging.CRITICAL + 1
DEFAULT_FORMAT = "[%(levelname)s] %(name)s: %(message)s"
VERBOSE_FORMAT = (
    "%(asctime)s %(levelname)-8s %(name)s.%(funcName)s:%(lineno)d | %(message)s"
)

_handler: logging.Handler | None = None


# =============================================================================
# PUBLIC API
# =============================================================================
def get_logger(name: str) -> logging.Logger:
    """Logger for ``name``, placed under the ``geotomo`` namespace.

    Names outside the namespace become children of it, so every record
    reaches the package handler.

    Examples:
        >>> get_logger("geotomo.rates").name
        'geotomo.rates'
        >>> get_logger("scratch").name
        'geotomo.scratch'
    """
    if _handler is None:
        configure_logging()
    root = logging.getLogger(ROOT_LOGGER_NAME)
    if name == ROOT_LOGGER_NAME:
        return root
    if name.startswith(ROOT_LOGGER_NAME + "."):
        return logging.getLogger(name)
    return root.getChild(name)


def configure_logging(
    level: int = DEFAULT_LOG_LEVEL,
    *,
    format_string: str | None = None,
    verbose: bool = False,
) -> None:
    """Install (or replace) the package handler.

    Handlers attached by the application are left alone; only the one owned
    by this module is swapped.

    Args:
        level: Level of the ``geotomo`` logger and its handler.
        format_string: Record format; defaults to the short or verbose format.
        verbose: Use the format with time, function and line.
    """
    global _handler  # noqa: PLW0603

    root = logging.getLogger(ROOT_LOGGER_NAME)
    if _handler is not None:
        root.removeHandler(_handler)

    fmt = format_string or (VERBOSE_FORMAT if verbose else DEFAULT_FORMAT)
    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(fmt))
    root.addHandler(handler)
    root.setLevel(level)
    _handler = handler


def enable_debug_logging() -> None:
    """DEBUG records with the verbose format (``geotomo -v``)."""
    configure_logging(logging.DEBUG, verbose=True)


def disable_logging() -> None:
    """Drop every record (``geotomo -q``)."""
    configure_logging(QUIET_LEVEL)


def reset_logging() -> None:
    """Remove the package handler and restore the unset level."""
    global _handler  # noqa: PLW0603

    root = logging.getLogger(ROOT_LOGGER_NAME)
    if _handler is not None:
        root.removeHandler(_handler)
        _handler = None
    root.setLevel(logging.NOTSET)


# =============================================================================
# STRUCTURED RECORDS
# =============================================================================
def log_stage(logger: logging.Logger, stage: str, **context: Any) -> None:
    """DEBUG record marking the start of a pipeline stage.

    Examples:
        >>> log_stage(get_logger(__name__), "build_influx", n_boundary=64)
    """
    logger.debug("stage=%s %s", stage, _pairs(context))


def log_check(
    logger: logging.Logger,
    name: str,
    value: float | None,
    target: float | None,
    passed: bool,
) -> None:
    """INFO record for a suite check; failures are logged at WARNING."""
    level = logging.INFO if passed else logging.WARNING
    logger.log(
        level,
        "check=%s pass=%s value=%s target=%s",
        name,
        passed,
        _number(value),
        _number(target),
    )


# =============================================================================
# PRIVATE HELPERS
# =============================================================================
def _pairs(context: Mapping[str, Any]) -> str:
    return " ".join(f"{key}={value!r}" for key, value in context.items())


def _number(value: float | None) -> str:
    return "-" if value is None else f"{value:.6g}"
