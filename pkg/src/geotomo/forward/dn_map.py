"""Full and partial Dirichlet-to-Neumann maps.

``Lambda f = (gamma d_nu u)|_dM`` is assembled column by column from the
Schur complement ``S = K_bb - K_bi K_ii^-1 K_ib`` of the stiffness matrix
and scaled by the boundary weights, so that ``<Lambda f, h> = f^T S h`` in
the weighted boundary pairing. Columns are solved in parallel chunks.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from dataclasses import dataclass
from pathlib import Path
from typing import Any

# Third-party
import numpy as np
from numpy.typing import NDArray

# Project/Local
from .._internal import get_logger, log_stage, write_csv, write_json
from .._internal.parallel import map_chunks, split_rows, worker_count
from ..constants import DEFAULT_EPSILON, DEFAULT_SEED
from ..grids import face_slices
from .chart import BoundaryNodes, BoxChart
from .solver import ConductivityField, DirichletSolver

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
FloatArray = NDArray[np.float64]
BoolArray = NDArray[np.bool_]


# =============================================================================
# CORE CLASSES
# =============================================================================
@dataclass(frozen=True)
class DNMap:
    """Discrete Dirichlet-to-Neumann map of a conductivity on a box chart.

    Attributes:
        chart: The box chart.
        schur: Symmetric Schur complement (integrated currents per node).
        epsilon: Threshold used for the default masks.
        mask_minus: Boundary nodes with ``d_nu phi < epsilon``.
        mask_plus: Boundary nodes with ``d_nu phi >= epsilon``.
    """

    chart: BoxChart
    schur: FloatArray
    epsilon: float
    mask_minus: BoolArray
    mask_plus: BoolArray

    @property
    def boundary(self) -> BoundaryNodes:
        return self.chart.boundary

    @property
    def matrix(self) -> FloatArray:
        """Flux densities: ``W^-1 S``."""
        return self.schur / self.boundary.weights[:, None]

    def apply(self, f: Any) -> Any:
        """``Lambda f`` as a flux density at the boundary nodes."""
        return (self.schur @ f) / self.boundary.weights

    def inner(self, f: Any, h: Any) -> Any:
        """Weighted boundary pairing ``int_dM f h dS_g``."""
        return np.sum(self.boundary.weights * f * h)

    def total_flux(self, f: Any) -> Any:
        return self.inner(self.apply(f), np.ones(self.boundary.size))

    def symmetry_defect(self, n_pairs: int = 10, seed: int = DEFAULT_SEED) -> float:
        """Max relative ``|<Lf, h> - <f, Lh>|`` over random pairs."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n_pairs):
            f, h = rng.standard_normal((2, self.boundary.size))
            left = self.inner(self.apply(f), h)
            right = self.inner(f, self.apply(h))
            scale = max(abs(left), abs(right), np.finfo(float).tiny)
            worst = max(worst, float(abs(left - right) / scale))
        return worst

    def masks(self, epsilon: float) -> tuple[BoolArray, BoolArray]:
        return self.boundary.masks(epsilon)

    def partial_residual(
        self,
        other: DNMap,
        epsilon: float | None = None,
        basis_size: int | None = None,
        seed: int = DEFAULT_SEED,
    ) -> float:
        """Norm of ``(Lambda_self - Lambda_other)`` observed on ``dM_-,eps``.

        The operator acts on the span of ``basis_size`` seeded random boundary
        functions (all nodal functions when ``None``), orthonormal in the
        weighted pairing; the norm is the weighted operator norm.
        """
        if other.chart.grid != self.chart.grid:
            msg = "DN maps live on different grids"
            raise ValueError(msg)
        eps = self.epsilon if epsilon is None else epsilon
        minus, _ = self.masks(eps)
        if not np.any(minus):
            return 0.0
        root_w = np.sqrt(self.boundary.weights)
        diff = self.matrix - other.matrix
        if basis_size is None:
            columns = diff / root_w[None, :]
        else:
            rng = np.random.default_rng(seed)
            raw = rng.standard_normal((self.boundary.size, basis_size))
            q, _ = np.linalg.qr(root_w[:, None] * raw)
            columns = diff @ (q / root_w[:, None])
        block = root_w[minus, None] * columns[minus]
        return float(np.linalg.norm(block, ord=2))

    def export(self, out_dir: Path, stem: str = "dn_map") -> list[Path]:
        """Dense matrix CSV plus a boundary-node manifest JSON."""
        matrix = self.matrix
        columns = {f"c{j}": matrix[:, j] for j in range(matrix.shape[1])}
        header = {"chart": self.chart.name, "epsilon": self.epsilon}
        csv_path = write_csv(out_dir / f"{stem}.csv", columns, header)
        manifest = {
            "chart": self.chart.name,
            "grid": {
                "lower": self.chart.grid.lower,
                "upper": self.chart.grid.upper,
                "shape": self.chart.grid.shape,
            },
            "epsilon": self.epsilon,
            "nodes": [
                {
                    "flat": int(flat),
                    "point": point,
                    "weight": weight,
                    "dphi": dphi,
                    "minus": bool(minus),
                }
                for flat, point, weight, dphi, minus in zip(
                    self.boundary.flat,
                    self.boundary.points,
                    self.boundary.weights,
                    self.boundary.dphi,
                    self.mask_minus,
                    strict=True,
                )
            ],
        }
        json_path = write_json(out_dir / f"{stem}_manifest.json", manifest)
        return [csv_path, json_path]


# =============================================================================
# PUBLIC API
# =============================================================================


def dn_map(
    chart: BoxChart,
    gamma: ConductivityField,
    epsilon: float = DEFAULT_EPSILON,
    workers: int | None = None,
) -> DNMap:
    """Assemble the DN map by solving for every boundary nodal basis function.

    Args:
        chart: The box chart.
        gamma: Conductivity.
        epsilon: Mask threshold on ``d_nu phi``.
        workers: Thread cap (``GEOTOMO_THREADS`` when ``None``).

    Returns:
        The assembled map with its default masks.

    Examples:
        >>> chart = BoxChart.segment((9, 5, 5))
        >>> dn = dn_map(chart, ConductivityField.constant(chart))
        >>> bool(abs(dn.total_flux(chart.boundary.points[:, 0])) < 1e-10)
        True
    """
    solver = DirichletSolver(chart, gamma)
    n_b = chart.boundary.size
    n_jobs = worker_count() if workers is None else workers
    chunks = split_rows(n_b, max(1, 4 * n_jobs))

    def columns(block: slice) -> FloatArray:
        basis = np.zeros((n_b, block.stop - block.start))
        basis[np.arange(block.start, block.stop), np.arange(basis.shape[1])] = 1.0
        return np.asarray(solver.k_bb @ basis + solver.k_bi @ solver.extend(basis))

    schur = np.hstack(map_chunks(columns, chunks, n_jobs))
    schur = 0.5 * (schur + schur.T)
    minus, plus = chart.masks(epsilon)
    log_stage(
        logger,
        "dn_map",
        chart=chart.name,
        n_boundary=n_b,
        n_minus=int(minus.sum()),
        n_plus=int(plus.sum()),
    )
    return DNMap(
        chart=chart,
        schur=schur,
        epsilon=float(epsilon),
        mask_minus=minus,
        mask_plus=plus,
    )


def partial_data_residual(
    chart: BoxChart,
    gamma1: ConductivityField,
    gamma2: ConductivityField,
    epsilon: float = DEFAULT_EPSILON,
    basis_size: int | None = None,
) -> float:
    """Norm of ``Lambda_1 - Lambda_2`` observed on ``dM_-,eps``.

    Zero (to solver tolerance) for identical conductivities; nondecreasing in
    ``epsilon`` since ``dM_-,eps`` grows with it.
    """
    first = dn_map(chart, gamma1, epsilon)
    second = dn_map(chart, gamma2, epsilon)
    return first.partial_residual(second, epsilon, basis_size)


def normal_flux(chart: BoxChart, gamma: ConductivityField, u: Any) -> Any:
    """``gamma d_nu u`` at the boundary nodes from one-sided differences.

    Nodes on several faces average the face values with the face weights,
    the same way the Schur complement collects them.
    """
    calc = chart.calculus(rule="trapezoid")
    grid = chart.grid
    total = np.zeros(grid.shape, dtype=np.result_type(np.asarray(u), float))
    weights = np.zeros(grid.shape)
    for axis, side, index in face_slices(grid.dim):
        area = calc.face_area_factor(axis, index)
        face = grid.face_weights(axis, "trapezoid") * area
        derivative = calc.normal_derivative(u, axis, side, index)
        total[index] += face * gamma.values[index] * derivative
        weights[index] += face
    mask = grid.boundary_mask()
    return total[mask] / weights[mask]
