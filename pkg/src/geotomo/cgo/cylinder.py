"""The extended cylinder ``[x1 interval] x M0~`` and its discrete operators.

Fields are complex arrays of shape ``(n_x1, n, n)``: ``x1`` is uniform on an
interval 1.5 times the x1-extent of M, closed periodically or
antiperiodically, and the transversal axes form a square grid over the
enlarged disc with Dirichlet conditions outside it. The metric is
``dx1^2 + sigma(x') |dx'|^2``.

All operators here use second-order central differences; they are exactly
the operators the shifted inverse diagonalizes.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any

# Third-party
import numpy as np
import scipy.linalg
import scipy.sparse as sp
from numpy.typing import NDArray

# Project/Local
from .._internal import get_logger, log_stage
from ..constants import (
    CGO_BASE_MARGIN,
    CGO_BASE_RADIUS,
    CUTOFF_WIDTH,
    DEFAULT_TRANSVERSAL_SPACING,
    DEFAULT_X1_POINTS,
    EXTENSION_FACTOR,
)
from ..enums import X1Closure
from ..geometry.charts import ConformalDisc
from ..grids import BoxGrid, DiagonalCalculus
from ..protocols import FloatArray

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
ComplexArray = NDArray[np.complex128]

_MASK_SLACK = 1e-9


# =============================================================================
# CORE CLASSES
# =============================================================================


@dataclass(frozen=True)
class TransversalBasis:
    """Dirichlet eigenpairs of ``-Delta_g0`` on the enlarged disc.

    ``vectors`` is sigma-orthonormal: ``V.T @ diag(sigma) @ V = I``.
    """

    eigenvalues: FloatArray
    vectors: FloatArray

    @property
    def n_modes(self) -> int:
        return int(self.eigenvalues.size)


class ExtendedCylinder:
    """Grid, operators and transversal basis of the extended cylinder.

    Args:
        base: Transversal chart M0; its enlargement bounds the grid.
        x1_range: The x1-interval of M.
        n_x1: Number of x1 nodes (even).
        spacing: Target transversal spacing.
        closure: Periodic or antiperiodic closure in x1.

    Example:
        >>> cyl = ExtendedCylinder(n_x1=16, spacing=0.125)
        >>> float(cyl.x1[0]), cyl.length
        (-0.25, 1.5)
    """

    def __init__(
        self,
        base: ConformalDisc | None = None,
        x1_range: tuple[float, float] = (0.0, 1.0),
        n_x1: int = DEFAULT_X1_POINTS,
        spacing: float = DEFAULT_TRANSVERSAL_SPACING,
        closure: X1Closure = X1Closure.ANTIPERIODIC,
    ) -> None:
        if base is None:
            base = ConformalDisc(radius=CGO_BASE_RADIUS, margin=CGO_BASE_MARGIN)
        x1_min, x1_max = x1_range
        if x1_max <= x1_min:
            msg = f"x1 range must be increasing, got {x1_range}"
            raise ValueError(msg)
        if n_x1 < 8 or n_x1 % 2:
            msg = f"n_x1 must be even and at least 8, got {n_x1}"
            raise ValueError(msg)
        if spacing <= 0.0:
            msg = f"Transversal spacing must be positive, got {spacing}"
            raise ValueError(msg)

        self.base = base
        self.x1_min = float(x1_min)
        self.x1_max = float(x1_max)
        self.closure = closure
        extent = self.x1_max - self.x1_min
        self.length = EXTENSION_FACTOR * extent
        self.lower = self.x1_min - 0.5 * (self.length - extent)
        self.n_x1 = n_x1
        self.h1 = self.length / n_x1
        self.x1 = self.lower + self.h1 * np.arange(n_x1)

        self.outer_radius = base.radius + base.margin
        n_side = int(round(2.0 * self.outer_radius / spacing)) + 1
        self.n_side = n_side
        self.h = 2.0 * self.outer_radius / (n_side - 1)
        axis = np.linspace(-self.outer_radius, self.outer_radius, n_side)
        self.xt = axis
        gx, gy = np.meshgrid(axis, axis, indexing="ij")
        self.transversal_points = np.stack([gx, gy], axis=-1)
        radius = np.hypot(gx, gy)
        self.mask2d = radius < self.outer_radius - _MASK_SLACK
        sigma = np.ones_like(radius)
        sigma[self.mask2d] = base.conformal_factor(self.transversal_points[self.mask2d])
        self.sigma2d = sigma
        self.radius2d = radius

        self.shape = (n_x1, n_side, n_side)
        self.mask = np.broadcast_to(self.mask2d, self.shape)
        self.sigma = np.broadcast_to(sigma, self.shape)
        x1_in = (self.x1 >= self.x1_min - _MASK_SLACK) & (
            self.x1 <= self.x1_max + _MASK_SLACK
        )
        disc_in = radius <= base.radius + _MASK_SLACK
        self.in_m = x1_in[:, None, None] & disc_in[None, :, :]
        cell = self.h1 * self.h**2
        self.weights = np.where(self.mask, cell * self.sigma, 0.0)

        shift = 0.5 if closure is X1Closure.ANTIPERIODIC else 0.0
        self._wrap = -1.0 if closure is X1Closure.ANTIPERIODIC else 1.0
        self._modulation = np.exp(1j * math.pi * 2.0 * shift * np.arange(n_x1) / n_x1)
        k = np.fft.fftfreq(n_x1) * n_x1
        angle = 2.0 * math.pi * (k + shift) / n_x1
        self.second_symbol = (2.0 - 2.0 * np.cos(angle)) / self.h1**2
        self.first_symbol = np.sin(angle) / self.h1
        log_stage(
            logger,
            "extended_cylinder",
            n_x1=n_x1,
            n_side=n_side,
            n_transversal=int(self.mask2d.sum()),
            closure=str(closure),
        )

    # -- geometry -------------------------------------------------------------

    @property
    def box(self) -> BoxGrid:
        """The node box (without the periodic seam)."""
        top = self.lower + self.h1 * (self.n_x1 - 1)
        r = self.outer_radius
        return BoxGrid(lower=(self.lower, -r, -r), upper=(top, r, r), shape=self.shape)

    def calculus(self) -> DiagonalCalculus:
        """Fourth-order calculus on the node box for coefficient fields."""
        ones = np.ones(self.shape)
        sigma = np.array(self.sigma)
        return DiagonalCalculus(self.box, [ones, sigma, sigma], rule="trapezoid")

    def mesh(self) -> tuple[FloatArray, FloatArray, FloatArray]:
        x1 = np.broadcast_to(self.x1[:, None, None], self.shape)
        x2 = np.broadcast_to(self.transversal_points[None, ..., 0], self.shape)
        x3 = np.broadcast_to(self.transversal_points[None, ..., 1], self.shape)
        return x1, x2, x3

    def x1_cutoff(self, width: float = CUTOFF_WIDTH) -> FloatArray:
        """Smooth cutoff in x1: one on M, zero ``width`` beyond it."""
        d = np.maximum(self.x1_min - self.x1, self.x1 - self.x1_max)
        return smooth_cutoff(d, width)

    def transversal_cutoff(self, width: float = CUTOFF_WIDTH) -> FloatArray:
        """Smooth cutoff in x': one on M0, zero ``width`` beyond it."""
        return smooth_cutoff(self.radius2d - self.base.radius, width)

    # -- differences ----------------------------------------------------------

    def restrict(self, u: Any) -> Any:
        return np.where(self.mask, u, 0.0)

    def d1(self, u: Any) -> Any:
        """Central difference in x1 across the closure seam."""
        ahead, behind = self._neighbours(np.asarray(u))
        return (ahead - behind) / (2.0 * self.h1)

    def d11(self, u: Any) -> Any:
        v = np.asarray(u)
        ahead, behind = self._neighbours(v)
        return (ahead - 2.0 * v + behind) / self.h1**2

    def dt(self, u: Any, axis: int) -> Any:
        """Central difference along a transversal axis (1 or 2), zero outside."""
        v = self.restrict(u)
        out = (np.roll(v, -1, axis=axis) - np.roll(v, 1, axis=axis)) / (2.0 * self.h)
        return self.restrict(out)

    def laplace0(self, u: Any) -> Any:
        """``Delta_g0 u`` by the five-point stencil with Dirichlet data."""
        v = self.restrict(u)
        total = -4.0 * v
        for axis in (1, 2):
            total = total + np.roll(v, -1, axis=axis) + np.roll(v, 1, axis=axis)
        return self.restrict(total / (self.h**2 * self.sigma))

    def laplacian(self, u: Any) -> Any:
        return self.restrict(self.d11(u)) + self.laplace0(u)

    def partials(self, u: Any) -> list[Any]:
        return [self.restrict(self.d1(u)), self.dt(u, 1), self.dt(u, 2)]

    def covector_apply(self, b: list[Any], u: Any) -> Any:
        """``<B, grad u>_g = g^{ii} b_i d_i u`` for covariant components ``b``."""
        d = self.partials(u)
        return b[0] * d[0] + (b[1] * d[1] + b[2] * d[2]) / self.sigma

    def covector_adjoint(self, b: list[Any], v: Any) -> Any:
        """Adjoint of ``covector_apply`` in the weighted inner product."""
        w = self.weights
        safe = np.where(self.mask, w, 1.0)
        flux = [w * b[0] * v, w * b[1] * v / self.sigma, w * b[2] * v / self.sigma]
        total = self.restrict(self.d1(flux[0])) + self.dt(flux[1], 1)
        total = total + self.dt(flux[2], 2)
        return self.restrict(-total / safe)

    def shifted_apply(self, u: Any, t: float) -> Any:
        """``(-Delta_g - 2 t d1 - t^2) u``."""
        v = self.restrict(u)
        out = -self.d11(v) - 2.0 * t * self.d1(v) - t * t * v - self.laplace0(v)
        return self.restrict(out)

    # -- norms ----------------------------------------------------------------

    def inner(self, u: Any, v: Any, region: NDArray[np.bool_] | None = None) -> Any:
        w = self.weights if region is None else self.weights * region
        return np.sum(w * np.conj(u) * v)

    def norm(self, u: Any, region: NDArray[np.bool_] | None = None) -> float:
        return float(np.sqrt(np.real(self.inner(u, u, region))))

    def sobolev_norms(self, u: Any) -> dict[int, float]:
        """``H^s(M)`` norms for s in {0, 1, 2} from grid gradients and Laplacians."""
        l2 = self.norm(u, self.in_m) ** 2
        grad = self.partials(u)
        transverse = np.abs(grad[1]) ** 2 + np.abs(grad[2]) ** 2
        g2 = np.abs(grad[0]) ** 2 + transverse / self.sigma
        h1 = l2 + float(np.sum(self.weights * self.in_m * g2))
        h2 = h1 + self.norm(self.laplacian(u), self.in_m) ** 2
        return {0: math.sqrt(l2), 1: math.sqrt(h1), 2: math.sqrt(h2)}

    # -- spectral representation ----------------------------------------------

    @cached_property
    def basis(self) -> TransversalBasis:
        """Generalized eigenpairs ``K v = mu diag(sigma) v`` of the stencil."""
        stiffness = self.transversal_stiffness().toarray()
        sigma = self.sigma2d[self.mask2d]
        log_stage(logger, "transversal_basis", n=sigma.size)
        mu, vectors = scipy.linalg.eigh(stiffness, np.diag(sigma))
        return TransversalBasis(eigenvalues=mu, vectors=vectors)

    def transversal_stiffness(self) -> sp.csr_matrix:
        """Euclidean five-point ``-Delta`` on the disc nodes (Dirichlet)."""
        index = -np.ones(self.mask2d.shape, dtype=np.int64)
        index[self.mask2d] = np.arange(int(self.mask2d.sum()))
        rows: list[NDArray[np.int64]] = []
        cols: list[NDArray[np.int64]] = []
        vals: list[FloatArray] = []
        ii, jj = np.nonzero(self.mask2d)
        me = index[ii, jj]
        rows.append(me)
        cols.append(me)
        vals.append(np.full(me.size, 4.0))
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            other = index[ii + di, jj + dj]
            keep = other >= 0
            rows.append(me[keep])
            cols.append(other[keep])
            vals.append(np.full(int(keep.sum()), -1.0))
        n = me.size
        matrix = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        )
        return (matrix / self.h**2).tocsr()

    def to_modes(self, u: Any) -> ComplexArray:
        """Coefficients ``(n_x1, n_modes)`` in the x1-Fourier x eigenbasis."""
        v = np.asarray(u, dtype=complex) * np.conj(self._modulation)[:, None, None]
        spectrum = np.fft.fft(v, axis=0, norm="ortho")
        sigma = self.sigma2d[self.mask2d]
        return (spectrum[:, self.mask2d] * sigma) @ self.basis.vectors

    def from_modes(self, coeffs: Any) -> ComplexArray:
        spectrum = np.zeros(self.shape, dtype=complex)
        spectrum[:, self.mask2d] = np.asarray(coeffs) @ self.basis.vectors.T
        v = np.fft.ifft(spectrum, axis=0, norm="ortho")
        return v * self._modulation[:, None, None]

    # -- helpers --------------------------------------------------------------

    def _neighbours(self, v: Any) -> tuple[Any, Any]:
        ahead = np.roll(v, -1, axis=0)
        behind = np.roll(v, 1, axis=0)
        if self._wrap != 1.0:
            ahead[-1] *= self._wrap
            behind[0] *= self._wrap
        return ahead, behind


# =============================================================================
# PUBLIC API
# =============================================================================


def smooth_cutoff(distance: Any, width: float) -> FloatArray:
    """C-infinity step: one for ``distance <= 0``, zero for ``distance >= width``.

    Examples:
        >>> smooth_cutoff(np.array([-1.0, 0.05, 1.0]), 0.1).round(3).tolist()
        [1.0, 0.5, 0.0]
    """
    s = np.clip(np.asarray(distance, dtype=float) / width, 0.0, 1.0)
    rise = _flat(1.0 - s)
    return rise / (rise + _flat(s))


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _flat(s: FloatArray) -> FloatArray:
    safe = np.where(s > 0.0, s, 1.0)
    return np.where(s > 0.0, np.exp(-1.0 / safe), 0.0)
