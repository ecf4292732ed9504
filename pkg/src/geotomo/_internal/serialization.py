"""Deterministic JSON and CSV serialization for report artifacts.

CSV artifacts carry a one-line JSON header (prefixed with ``#``) followed by a
column-name row and one row per sample. Floats are written with 17 significant
digits so identical inputs produce identical bytes.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import json
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

# Third-party
import numpy as np
from numpy.typing import ArrayLike

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
HEADER_PREFIX = "# "
FLOAT_FORMAT = ".17g"

# =============================================================================
# PUBLIC API
# =============================================================================


def to_jsonable(data: Any) -> Any:
    """Convert numpy scalars, arrays and nested containers to plain JSON types.

    Non-finite floats are mapped to the strings ``"inf"``, ``"-inf"`` and
    ``"nan"`` so the output is strict JSON.

    Examples:
        >>> to_jsonable({"slope": np.float64(-1.0), "taus": np.array([4, 8])})
        {'slope': -1.0, 'taus': [4, 8]}
    """
    if isinstance(data, Mapping):
        return {str(k): to_jsonable(v) for k, v in data.items()}  # pyright: ignore[reportUnknownVariableType, reportUnknownArgumentType]
    if isinstance(data, np.ndarray):
        return [to_jsonable(v) for v in data.tolist()]  # pyright: ignore[reportUnknownVariableType]
    if isinstance(data, list | tuple):
        return [to_jsonable(v) for v in data]  # pyright: ignore[reportUnknownVariableType]
    if isinstance(data, np.bool_):
        return bool(data)
    if isinstance(data, np.integer):
        return int(data)  # pyright: ignore[reportUnknownArgumentType]
    if isinstance(data, float | np.floating):
        value = float(data)  # pyright: ignore[reportUnknownArgumentType]
        if np.isnan(value):
            return "nan"
        if np.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return data


def dumps_json(data: Any) -> str:
    """Serialize data to deterministic, sorted, indented JSON."""
    return json.dumps(to_jsonable(data), sort_keys=True, indent=2) + "\n"


def write_json(path: Path, data: Any) -> Path:
    """Write deterministic JSON to ``path``, creating parent directories."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(data), encoding="utf-8")
    return path


def write_csv(
    path: Path,
    columns: Mapping[str, ArrayLike],
    header: Mapping[str, Any] | None = None,
) -> Path:
    """Write equal-length columns as CSV with a one-line JSON header.

    Args:
        path: Destination file.
        columns: Ordered mapping of column name to 1D values.
        header: Metadata written on the first line (grid spec, λ, chart id).

    Returns:
        The written path.

    Raises:
        ValueError: If the columns have different lengths.

    Examples:
        >>> write_csv(Path("out/rays.csv"), {"tau": [4.0, 8.0], "value": [1.0, 0.5]})
        PosixPath('out/rays.csv')
    """
    arrays = [np.asarray(v).ravel() for v in columns.values()]
    lengths = {a.size for a in arrays}
    if len(lengths) > 1:
        msg = f"CSV columns must have equal length, got {sorted(lengths)}"
        raise ValueError(msg)

    lines = [HEADER_PREFIX + json.dumps(to_jsonable(header or {}), sort_keys=True)]
    lines.append(",".join(columns.keys()))
    for row in zip(*arrays, strict=True):
        lines.append(",".join(_format_cell(v) for v in row))

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_csv(path: Path) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    """Read a CSV written by :func:`write_csv` (header line optional).

    Returns:
        The decoded header and a mapping of column name to float arrays.

    Raises:
        ValueError: If the file has no column row or a non-numeric cell.
    """
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    header: dict[str, Any] = {}
    if lines and lines[0].startswith("#"):
        header = json.loads(lines.pop(0).lstrip("#").strip() or "{}")
    if not lines:
        msg = f"CSV file {path} has no column row"
        raise ValueError(msg)

    names = [n.strip() for n in lines[0].split(",")]
    rows = [_parse_row(ln, len(names)) for ln in lines[1:]]
    data = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return header, {name: data[:, j] for j, name in enumerate(names)}


def format_rows(rows: Sequence[Sequence[float]]) -> list[str]:
    """Format numeric rows with the deterministic float format."""
    return [",".join(_format_cell(v) for v in row) for row in rows]


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _format_cell(value: Any) -> str:
    if isinstance(value, bool | np.bool_):
        return "1" if value else "0"
    if isinstance(value, int | np.integer):
        return str(int(value))  # pyright: ignore[reportUnknownArgumentType]
    return format(float(value), FLOAT_FORMAT)


def _parse_row(line: str, width: int) -> list[float]:
    cells = line.split(",")
    if len(cells) != width:
        msg = f"Expected {width} cells, got {len(cells)} in row {line!r}"
        raise ValueError(msg)
    try:
        return [float(c) for c in cells]
    except ValueError as e:
        raise ValueError(f"Non-numeric cell in row {line!r}: {e}") from e
