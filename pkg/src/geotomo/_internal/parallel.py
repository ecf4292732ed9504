"""Worker-count resolution and chunked parallel maps."""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import os
from collections.abc import Callable, Sequence
from typing import TypeVar

# Third-party
from joblib import Parallel, delayed

# Project/Local
from ..constants import THREADS_ENV_VAR
from ..exceptions import ConfigError

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
T = TypeVar("T")
R = TypeVar("R")

# =============================================================================
# PUBLIC API
# =============================================================================


def worker_count(default: int = 1) -> int:
    """Worker cap from ``GEOTOMO_THREADS`` (``default`` when unset).

    Raises:
        ConfigError: If the variable is set but is not a positive integer.
    """
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
    except ValueError:
        msg = f"{THREADS_ENV_VAR} must be a positive integer, got {raw!r}"
        raise ConfigError(msg) from None
    if value < 1:
        msg = f"{THREADS_ENV_VAR} must be a positive integer, got {value}"
        raise ConfigError(msg)
    return value


def map_chunks(
    fn: Callable[[T], R], items: Sequence[T], workers: int | None = None
) -> list[R]:
    """Apply ``fn`` to every item, in order, on up to ``workers`` threads.

    A single worker runs inline.
    """
    n_jobs = worker_count() if workers is None else workers
    if n_jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    runner = Parallel(n_jobs=min(n_jobs, len(items)), prefer="threads")
    return list(runner(delayed(fn)(item) for item in items))


def split_rows(n: int, parts: int) -> list[slice]:
    """Contiguous row slices covering ``range(n)`` in at most ``parts`` pieces."""
    parts = max(1, min(parts, n))
    bounds = [round(k * n / parts) for k in range(parts + 1)]
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:], strict=True) if b > a]
