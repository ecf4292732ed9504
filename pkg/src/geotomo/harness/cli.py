"""Command-line entry point: ``geotomo run`` and ``geotomo fit``.

Exit codes: 0 when every check passed, 1 when a suite recorded a failure,
2 for configuration and usage errors.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

# Project/Local
from .._internal import dumps_json, get_logger, read_csv
from .._internal.logging import (
    configure_logging,
    disable_logging,
    enable_debug_logging,
)
from ..constants import EXIT_CONFIG_ERROR, EXIT_FAILURE, EXIT_OK
from ..enums import Suite
from ..exceptions import ConfigError, RateFitError
from ..rates import fit_slope
from .config import default_config, load_config
from .suites import run_suite

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)


# =============================================================================
# PUBLIC API
# =============================================================================


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with the ``run`` and ``fit`` subcommands."""
    parser = argparse.ArgumentParser(
        prog="geotomo",
        description="Run the geotomo experiment suites and fit convergence rates.",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="count", default=0)
    verbosity.add_argument("-q", "--quiet", action="store_true")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run one suite (or 'all').")
    run.add_argument("--config", type=Path, help="TOML configuration file.")
    run.add_argument(
        "--suite",
        type=_suite,
        required=True,
        help=f"One of: {', '.join(s.value for s in Suite)}.",
    )
    run.add_argument("--out", type=Path, help="Report directory.")
    run.add_argument("--seed", type=int, help="Override the configured seed.")

    fit = commands.add_parser("fit", help="Fit log-log slopes of a rate CSV.")
    fit.add_argument(
        "--csv",
        type=Path,
        required=True,
        help="CSV whose first column is tau and whose other columns are values.",
    )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, dispatch the subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG_ERROR if exc.code else EXIT_OK

    if args.quiet:
        disable_logging()
    elif args.verbose > 1:
        enable_debug_logging()
    elif args.verbose:
        configure_logging(logging.INFO)

    if args.command == "run":
        return _run(args.config, args.suite, args.out, args.seed)
    return _fit(args.csv)


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _suite(name: str) -> Suite:
    try:
        return Suite(name.lower())
    except ValueError:
        choices = ", ".join(s.value for s in Suite)
        msg = f"unknown suite {name!r} (choose from {choices})"
        raise argparse.ArgumentTypeError(msg) from None


def _run(
    config_path: Path | None, suite: Suite, out: Path | None, seed: int | None
) -> int:
    try:
        config = default_config() if config_path is None else load_config(config_path)
        if seed is not None:
            config = config.model_copy(update={"seed": seed})
        outcome = run_suite(config, suite, out)
    except ConfigError as exc:
        print(f"geotomo: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    if outcome.exit_code != EXIT_OK:
        print(
            f"Suite '{suite}' failed; report at {outcome.report_path}",
            file=sys.stderr,
        )
        for name in outcome.failures:
            print(f"  FAILED {name}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"Suite '{suite}' passed; report at {outcome.report_path}")
    return EXIT_OK


def _fit(csv_path: Path) -> int:
    try:
        _, columns = read_csv(csv_path)
        rows = _fit_columns(columns)
    except (OSError, ValueError, RateFitError) as exc:
        print(f"geotomo: cannot fit {csv_path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    sys.stdout.write(dumps_json(rows))
    return EXIT_OK


def _fit_columns(columns: dict[str, Any]) -> list[dict[str, Any]]:
    names = list(columns)
    if len(names) < 2:
        msg = "need a tau column and at least one value column"
        raise ValueError(msg)
    taus = columns[names[0]]
    rows: list[dict[str, Any]] = []
    for name in names[1:]:
        slope, band = fit_slope(taus, columns[name])
        rows.append(
            {
                "quantity": name,
                "slope": slope,
                "band": band,
                "n_points": int(len(taus)),
            }
        )
        logger.info("%s: slope %.4f +/- %.4f", name, slope, band)
    return rows
