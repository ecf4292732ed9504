"""Gnuplot scripts written next to rate CSVs.

The scripts are plain text and are never executed by the toolkit; run them
with ``gnuplot <name>.gp`` to get a PNG beside the CSV.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from collections.abc import Sequence
from pathlib import Path

# Project/Local
from ..rates import RateReport

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
_TEMPLATE = """\
# Generated by geotomo; not run automatically.
set datafile separator ","
set datafile commentschars "#"
set key autotitle columnhead left bottom
set logscale xy
set xlabel "tau"
set ylabel "value"
set title "{title}"
set terminal pngcairo size 800,600
set output "{png}"
plot {series}
"""


# =============================================================================
# PUBLIC API
# =============================================================================


def rate_plot_script(
    csv_path: Path, reports: Sequence[RateReport], title: str | None = None
) -> Path:
    """Write ``<stem>.gp`` plotting every report column against ``tau``.

    ``csv_path`` must hold a ``tau`` column first and one column per report,
    in report order. Each series is annotated with its fitted slope.

    Returns:
        Path of the written script.
    """
    series = ", ".join(
        f'"{csv_path.name}" using 1:{k + 2} with linespoints '
        f'title "{r.quantity} ({_slope_label(r)}, target {r.target:g})"'
        for k, r in enumerate(reports)
    )
    script = _TEMPLATE.format(
        title=title or csv_path.stem,
        png=csv_path.with_suffix(".png").name,
        series=series,
    )
    path = csv_path.with_suffix(".gp")
    path.write_text(script, encoding="utf-8")
    return path


def rate_columns(reports: Sequence[RateReport]) -> dict[str, list[float]]:
    """CSV columns ``tau, <quantity>...`` for reports that share a ladder.

    Raises:
        ValueError: If the reports were measured on different ladders.
    """
    if not reports:
        msg = "No rate reports to tabulate"
        raise ValueError(msg)
    taus = list(reports[0].taus)
    columns: dict[str, list[float]] = {"tau": taus}
    for report in reports:
        if list(report.taus) != taus:
            msg = f"Report '{report.quantity}' uses a different tau ladder"
            raise ValueError(msg)
        columns[report.quantity] = list(report.values)
    return columns


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _slope_label(report: RateReport) -> str:
    if report.slope is None:
        return "identically zero"
    return f"slope {report.slope:.3f}"
