"""Experiment configuration, suites, rate plots and the command line."""

from __future__ import annotations

from .cli import build_parser, main
from .config import (
    CarlemanConfig,
    CGOConfig,
    ChartConfig,
    ExperimentConfig,
    ForwardConfig,
    GridConfig,
    RayConfig,
    ToleranceConfig,
    default_config,
    load_config,
    with_environment,
)
from .plots import rate_columns, rate_plot_script
from .suites import SUITES, SuiteRun, run_suite

__all__ = [
    "SUITES",
    "CGOConfig",
    "CarlemanConfig",
    "ChartConfig",
    "ExperimentConfig",
    "ForwardConfig",
    "GridConfig",
    "RayConfig",
    "SuiteRun",
    "ToleranceConfig",
    "build_parser",
    "default_config",
    "load_config",
    "main",
    "rate_columns",
    "rate_plot_script",
    "run_suite",
    "with_environment",
]
