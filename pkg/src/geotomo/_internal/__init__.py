"""Internal utilities (not part of public API)."""

from __future__ import annotations

from .logging import get_logger, log_check, log_stage, reset_logging
from .serialization import dumps_json, read_csv, write_csv, write_json

__all__ = [
    "dumps_json",
    "get_logger",
    "log_check",
    "log_stage",
    "read_csv",
    "reset_logging",
    "write_csv",
    "write_json",
]
