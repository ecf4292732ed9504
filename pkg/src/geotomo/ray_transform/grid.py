"""Interior field grids for the ray transform."""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from dataclasses import dataclass
from typing import Any

# Third-party
import numpy as np
from numpy.typing import NDArray

# Project/Local
from ..constants import DEFAULT_GRID_POINTS
from ..geometry.charts import ConformalDisc
from ..grids import BoxGrid
from ..protocols import FloatArray, ScalarField

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
_PAD_CELLS = 3


# =============================================================================
# CORE CLASSES
# =============================================================================


@dataclass(frozen=True)
class FieldGrid:
    """A square grid over a disc chart with the disc nodes as unknowns.

    The box extends three cells beyond the disc so that cubic interpolation
    is defined on every ray node. Fields are vectors over the masked nodes
    and vanish outside the disc.

    Attributes:
        chart: The disc chart.
        grid: Box grid (C-ordered).
        mask: Flat mask of the unknown nodes.
    """

    chart: ConformalDisc
    grid: BoxGrid
    mask: NDArray[np.bool_]

    @classmethod
    def for_chart(cls, chart: ConformalDisc, n: int = DEFAULT_GRID_POINTS) -> FieldGrid:
        """Grid with spacing ``2 radius / (n - 7)`` centered on the disc.

        Examples:
            >>> fg = FieldGrid.for_chart(ConformalDisc(), 41)
            >>> fg.grid.spacing[0] == 2.0 / 34
            True
        """
        if n < 2 * _PAD_CELLS + 3:
            msg = f"Field grid needs at least {2 * _PAD_CELLS + 3} nodes, got {n}"
            raise ValueError(msg)
        h = 2.0 * chart.radius / (n - 2 * _PAD_CELLS - 1)
        half = chart.radius + _PAD_CELLS * h
        grid = BoxGrid(lower=(-half, -half), upper=(half, half), shape=(n, n))
        mask = chart.boundary_sdf(grid.points()) <= 0.0
        return cls(chart=chart, grid=grid, mask=mask)

    @property
    def points(self) -> FloatArray:
        return self.grid.points()[self.mask]

    @property
    def n_unknowns(self) -> int:
        return int(self.mask.sum())

    @property
    def volume(self) -> FloatArray:
        """Trapezoid weights times ``|g|^{1/2}`` at the unknown nodes."""
        pts = self.points
        cell = self.grid.weights("trapezoid").ravel()[self.mask]
        return cell * np.sqrt(np.linalg.det(self.chart.g_eval(pts)))

    def sample(self, f: ScalarField) -> Any:
        return np.asarray(f(self.points))

    def embed(self, values: Any) -> Any:
        """Values on the full box (zero outside the disc), shaped like the grid."""
        vals = np.asarray(values)
        full = np.zeros(self.grid.size, dtype=vals.dtype)
        full[self.mask] = vals
        return full.reshape(self.grid.shape)

    def inner(self, a: Any, b: Any) -> Any:
        """``int a * conj(b) dV_g`` by grid quadrature."""
        return np.sum(self.volume * np.asarray(a) * np.conj(b))

    def norm(self, a: Any) -> float:
        return float(np.sqrt(np.real(self.inner(a, a))))
