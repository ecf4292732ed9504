"""Structured grids, finite differences, interpolation and diagonal-metric calculus.

Every field in geotomo lives on a uniform tensor grid (``BoxGrid``). This
module provides the discrete calculus used by the Carleman, CGO and forward
modules, and the sparse cubic interpolation used by the ray transform.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import itertools
from collections.abc import Callable, Iterator, Sequence
from typing import Any, Literal

# Third-party
import numpy as np
import scipy.integrate
import scipy.sparse as sp
from numpy.typing import NDArray
from pydantic import Field
from pydantic.dataclasses import dataclass

# Project/Local
from ._internal import get_logger
from .exceptions import DomainError

# =============================================================================
# LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
FloatArray = NDArray[np.float64]
IntArray = NDArray[np.int64]
Array = NDArray[Any]
QuadratureRule = Literal["trapezoid", "simpson"]

_MIN_STENCIL_POINTS = 5
_CUBIC_OFFSETS = (-1, 0, 1, 2)


# =============================================================================
# CORE CLASSES
# =============================================================================
@dataclass(frozen=True)
class BoxGrid:
    """Uniform tensor grid on the box ``[lower, upper]`` (nodes on the faces).

    Attributes:
        lower: Lower corner, one entry per axis.
        upper: Upper corner, one entry per axis.
        shape: Number of nodes per axis (>= 2).

    Examples:
        >>> grid = BoxGrid(lower=(0.0, 0.0), upper=(1.0, 1.0), shape=(5, 9))
        >>> grid.spacing
        (0.25, 0.125)
        >>> grid.weights("trapezoid").sum()
        1.0
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]
    shape: tuple[int, ...] = Field(min_length=1)

    def __post_init__(self) -> None:
        if not (len(self.lower) == len(self.upper) == len(self.shape)):
            msg = (
                f"Grid corners and shape disagree in dimension: "
                f"{len(self.lower)}, {len(self.upper)}, {len(self.shape)}"
            )
            raise ValueError(msg)
        for lo, hi, n in zip(self.lower, self.upper, self.shape, strict=True):
            if hi <= lo:
                msg = f"Grid upper corner {hi} must exceed lower corner {lo}"
                raise ValueError(msg)
            if n < 2:
                msg = f"Grid needs at least 2 nodes per axis, got {n}"
                raise ValueError(msg)

    @classmethod
    def cube(cls, lower: float, upper: float, n: int, dim: int) -> BoxGrid:
        """Build a grid with the same extent and node count on every axis."""
        return cls(lower=(lower,) * dim, upper=(upper,) * dim, shape=(n,) * dim)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(
            (hi - lo) / (n - 1)
            for lo, hi, n in zip(self.lower, self.upper, self.shape, strict=True)
        )

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def axis(self, i: int) -> FloatArray:
        """Node coordinates along axis ``i``."""
        return np.linspace(self.lower[i], self.upper[i], self.shape[i])

    def mesh(self) -> tuple[FloatArray, ...]:
        """Coordinate arrays with ``indexing="ij"``."""
        axes = [self.axis(i) for i in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def points(self) -> FloatArray:
        """All nodes as an ``(size, dim)`` array in C order."""
        return np.stack([m.ravel() for m in self.mesh()], axis=-1)

    def boundary_mask(self) -> NDArray[np.bool_]:
        """Nodes lying on any face of the box."""
        mask = np.zeros(self.shape, dtype=bool)
        for i in range(self.dim):
            index: list[Any] = [slice(None)] * self.dim
            index[i] = 0
            mask[tuple(index)] = True
            index[i] = -1
            mask[tuple(index)] = True
        return mask

    def weights_1d(self, i: int, rule: QuadratureRule = "simpson") -> FloatArray:
        """Quadrature weights along axis ``i``."""
        return quadrature_weights(self.shape[i], self.spacing[i], rule)

    def weights(self, rule: QuadratureRule = "simpson") -> FloatArray:
        """Tensor-product volume quadrature weights (Euclidean)."""
        return _outer(*(self.weights_1d(i, rule) for i in range(self.dim)))

    def face_weights(self, axis: int, rule: QuadratureRule = "simpson") -> FloatArray:
        """Tensor quadrature weights on a face normal to ``axis``."""
        others = [self.weights_1d(j, rule) for j in range(self.dim) if j != axis]
        if not others:
            return np.ones(())
        return _outer(*others)

    def refined(self) -> BoxGrid:
        """Grid with every spacing halved (``n -> 2n - 1``)."""
        return BoxGrid(
            lower=self.lower,
            upper=self.upper,
            shape=tuple(2 * n - 1 for n in self.shape),
        )

    def contains(self, points: FloatArray, pad: int = 0) -> NDArray[np.bool_]:
        """Whether points lie ``pad`` cells inside the box."""
        lo = np.asarray(self.lower) + pad * np.asarray(self.spacing)
        hi = np.asarray(self.upper) - pad * np.asarray(self.spacing)
        return np.all((points >= lo) & (points <= hi), axis=-1)


def face_slices(dim: int) -> Iterator[tuple[int, int, tuple[Any, ...]]]:
    """Iterate over box faces as ``(axis, side, index)`` with side in {-1, +1}."""
    for axis in range(dim):
        for side in (-1, 1):
            index: list[Any] = [slice(None)] * dim
            index[axis] = 0 if side < 0 else -1
            yield axis, side, tuple(index)


class DiagonalCalculus:
    """Discrete Riemannian calculus for a diagonal metric on a ``BoxGrid``.

    Derivatives are 4th order; volume and face integrals use the grid's
    tensor quadrature. Vector fields are lists of contravariant components.

    Args:
        grid: The box grid.
        metric: Diagonal metric components ``g_ii`` sampled on the grid.
        rule: Quadrature rule for integrals.

    Example:
        >>> grid = BoxGrid.cube(0.0, 1.0, 33, 2)
        >>> calc = DiagonalCalculus.euclidean(grid)
        >>> x, y = grid.mesh()
        >>> float(calc.integrate(calc.laplacian(x**2 + y**2)))  # 4 * area
        4.0
    """

    def __init__(
        self,
        grid: BoxGrid,
        metric: Sequence[FloatArray],
        rule: QuadratureRule = "simpson",
    ) -> None:
        if len(metric) != grid.dim:
            msg = f"Metric has {len(metric)} components for a {grid.dim}D grid"
            raise ValueError(msg)
        comps = [
            np.broadcast_to(np.asarray(m, dtype=float), grid.shape) for m in metric
        ]
        if any(np.any(m <= 0.0) for m in comps):
            msg = "Diagonal metric must be positive at every node"
            raise DomainError(msg)
        self.grid = grid
        self.metric = comps
        self.rule: QuadratureRule = rule
        self.sqrt_det = np.sqrt(np.prod(np.stack(comps), axis=0))
        self._weights = grid.weights(rule)

    @classmethod
    def euclidean(
        cls, grid: BoxGrid, rule: QuadratureRule = "simpson"
    ) -> DiagonalCalculus:
        return cls(grid, [np.ones(grid.shape)] * grid.dim, rule)

    @classmethod
    def from_function(
        cls,
        grid: BoxGrid,
        metric_fn: Callable[..., Sequence[FloatArray]],
        rule: QuadratureRule = "simpson",
    ) -> DiagonalCalculus:
        """Sample ``metric_fn(*mesh)`` (returning diagonal components)."""
        return cls(grid, list(metric_fn(*grid.mesh())), rule)

    # -- differential operators ---------------------------------------------

    def partial(self, u: Array, axis: int) -> Array:
        return derivative(u, axis, self.grid.spacing[axis])

    def partials(self, u: Array) -> list[Array]:
        return [self.partial(u, i) for i in range(self.grid.dim)]

    def gradient(self, u: Array) -> list[Array]:
        """Contravariant gradient ``g^{ii} d_i u``."""
        return [d / g for d, g in zip(self.partials(u), self.metric, strict=True)]

    def divergence(self, field: Sequence[Array]) -> Array:
        """``|g|^{-1/2} sum_i d_i(|g|^{1/2} X^i)``."""
        total = sum(
            self.partial(self.sqrt_det * comp, i) for i, comp in enumerate(field)
        )
        return np.asarray(total) / self.sqrt_det

    def laplacian(self, u: Array) -> Array:
        return self.divergence(self.gradient(u))

    def dot(self, x: Sequence[Array], y: Sequence[Array]) -> Array:
        """Metric pairing ``g_ii X^i Y^i`` (no conjugation)."""
        terms = zip(self.metric, x, y, strict=True)
        return np.asarray(sum(g * a * b for g, a, b in terms))

    def grad_norm2(self, u: Array) -> FloatArray:
        """``|grad u|_g^2`` for real or complex ``u``."""
        return np.asarray(
            sum(
                np.abs(d) ** 2 / g
                for d, g in zip(self.partials(u), self.metric, strict=True)
            )
        )

    # -- quadrature ---------------------------------------------------------

    @property
    def volume_weights(self) -> FloatArray:
        """Quadrature weights including the volume factor ``|g|^{1/2}``."""
        return self._weights * self.sqrt_det

    def integrate(self, f: Array) -> Any:
        return np.sum(self.volume_weights * f)

    def l2_norm(self, f: Array) -> float:
        return float(np.sqrt(np.sum(self.volume_weights * np.abs(f) ** 2)))

    def face_area_factor(self, axis: int, index: tuple[Any, ...]) -> FloatArray:
        """Induced surface density on a face normal to ``axis``."""
        others = [self.metric[j][index] for j in range(self.grid.dim) if j != axis]
        if not others:
            return np.ones(())
        return np.sqrt(np.prod(np.stack(others), axis=0))

    def boundary_integral(
        self, face_fn: Callable[[int, int, tuple[Any, ...]], Array]
    ) -> Any:
        """Sum of face integrals of ``face_fn(axis, side, index)`` over all faces."""
        total: Any = 0.0
        for axis, side, index in face_slices(self.grid.dim):
            weights = self.grid.face_weights(axis, self.rule)
            density = weights * self.face_area_factor(axis, index)
            total = total + np.sum(density * face_fn(axis, side, index))
        return total

    def normal_derivative(
        self, u: Array, axis: int, side: int, index: tuple[Any, ...]
    ) -> Array:
        """``d_nu u`` on a face with the outward g-unit normal."""
        return side * self.partial(u, axis)[index] / np.sqrt(self.metric[axis][index])

    def normal_component(
        self, field: Sequence[Array], axis: int, side: int, index: tuple[Any, ...]
    ) -> Array:
        """``<X, nu>_g`` on a face."""
        return side * np.sqrt(self.metric[axis][index]) * field[axis][index]


# =============================================================================
# PUBLIC API - Differences
# =============================================================================


def derivative(values: Array, axis: int, spacing: float) -> Array:
    """Fourth-order first derivative along ``axis``.

    Interior nodes use the 5-point central stencil; the two nodes nearest each
    end use one-sided 5-point stencils, so the result is 4th order everywhere.

    Args:
        values: Samples on a uniform grid (real or complex).
        axis: Axis to differentiate along.
        spacing: Node spacing along that axis.

    Returns:
        Array of the same shape.

    Raises:
        ValueError: If fewer than 5 nodes lie along the axis.

    Examples:
        >>> x = np.linspace(0.0, 1.0, 11)
        >>> bool(np.allclose(derivative(x**4, 0, 0.1), 4 * x**3))
        True
    """
    f = np.moveaxis(np.asarray(values), axis, 0)
    if f.shape[0] < _MIN_STENCIL_POINTS:
        msg = (
            f"Need at least {_MIN_STENCIL_POINTS} nodes to differentiate, "
            f"got {f.shape[0]}"
        )
        raise ValueError(msg)
    if not np.iscomplexobj(f):
        f = f.astype(float)
    scale = 12.0 * spacing
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / scale
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / scale
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / scale
    d[-1] = (
        25.0 * f[-1] - 48.0 * f[-2] + 36.0 * f[-3] - 16.0 * f[-4] + 3.0 * f[-5]
    ) / scale
    d[-2] = (3.0 * f[-1] + 10.0 * f[-2] - 18.0 * f[-3] + 6.0 * f[-4] - f[-5]) / scale
    return np.moveaxis(d, 0, axis)


def spectral_derivative(values: Array, axis: int, spacing: float) -> Array:
    """First derivative of periodic samples by FFT (Nyquist mode dropped)."""
    f = np.asarray(values)
    n = f.shape[axis]
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=spacing)
    if n % 2 == 0:
        k[n // 2] = 0.0
    shape = [1] * f.ndim
    shape[axis] = n
    out = np.fft.ifft(1j * k.reshape(shape) * np.fft.fft(f, axis=axis), axis=axis)
    return out if np.iscomplexobj(f) else out.real


def quadrature_weights(
    n: int, h: float, rule: QuadratureRule = "simpson"
) -> FloatArray:
    """1D composite quadrature weights for ``n`` equispaced nodes."""
    if rule == "trapezoid" or n < 3:
        w = np.full(n, h)
        w[0] = w[-1] = 0.5 * h
        return w
    return np.asarray(scipy.integrate.simpson(np.eye(n), dx=h, axis=1), dtype=float)


# =============================================================================
# PUBLIC API - Interpolation
# =============================================================================


def cubic_weights(s: FloatArray) -> FloatArray:
    """Cubic Lagrange weights on offsets (-1, 0, 1, 2) for fractions ``s``.

    Returns:
        Array of shape ``s.shape + (4,)``; rows sum to one.
    """
    s = np.asarray(s, dtype=float)
    return np.stack(
        [
            -s * (s - 1.0) * (s - 2.0) / 6.0,
            (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
            -(s + 1.0) * s * (s - 2.0) / 2.0,
            (s + 1.0) * s * (s - 1.0) / 6.0,
        ],
        axis=-1,
    )


def interpolation_matrix(grid: BoxGrid, points: FloatArray) -> sp.csr_matrix:
    """Sparse tensor-cubic interpolation matrix from grid nodes to points.

    Args:
        grid: Source grid (C-ordered node values).
        points: Target points, shape ``(m, dim)``.

    Returns:
        CSR matrix ``P`` of shape ``(m, grid.size)`` with ``P @ f.ravel()``
        the interpolated values.

    Raises:
        DomainError: If a point is closer than one cell to the grid boundary.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if not np.all(np.isfinite(pts)):
        msg = "Interpolation points must be finite"
        raise DomainError(msg)
    inside = grid.contains(pts, pad=1)
    if not np.all(inside):
        bad = pts[~inside][0]
        count = int((~inside).sum())
        msg = f"{count} interpolation points outside the grid, e.g. {bad}"
        raise DomainError(msg)

    lower = np.asarray(grid.lower)
    h = np.asarray(grid.spacing)
    shape = np.asarray(grid.shape)
    u = (pts - lower) / h
    base = np.clip(np.floor(u).astype(np.int64), 1, shape - 3)
    frac = u - base
    w1d = [cubic_weights(frac[:, i]) for i in range(grid.dim)]

    m = pts.shape[0]
    rows_list: list[IntArray] = []
    cols_list: list[IntArray] = []
    vals_list: list[FloatArray] = []
    for combo in itertools.product(range(4), repeat=grid.dim):
        idx = [base[:, i] + _CUBIC_OFFSETS[c] for i, c in enumerate(combo)]
        weight = np.ones(m)
        for i, c in enumerate(combo):
            weight = weight * w1d[i][:, c]
        rows_list.append(np.arange(m, dtype=np.int64))
        cols_list.append(np.ravel_multi_index(tuple(idx), grid.shape).astype(np.int64))
        vals_list.append(weight)
    matrix = sp.coo_matrix(
        (
            np.concatenate(vals_list),
            (np.concatenate(rows_list), np.concatenate(cols_list)),
        ),
        shape=(m, grid.size),
    )
    return matrix.tocsr()


def interpolate(grid: BoxGrid, values: Array, points: FloatArray) -> Array:
    """Evaluate grid samples at arbitrary points by tensor-cubic interpolation."""
    matrix = interpolation_matrix(grid, points)
    return matrix @ np.asarray(values).ravel()


def periodic_lagrange(
    n: int, period: float, x: FloatArray
) -> tuple[IntArray, FloatArray]:
    """Four-point Lagrange stencil on ``n`` uniform periodic nodes ``k*period/n``.

    Returns:
        Node indices and weights, each of shape ``x.shape + (4,)``.
    """
    u = np.mod(np.asarray(x, dtype=float), period) * n / period
    i = np.floor(u).astype(np.int64)
    s = u - i
    offsets = np.asarray(_CUBIC_OFFSETS)
    idx = np.mod(i[..., None] + offsets, n)
    return idx, cubic_weights(s)


def nonuniform_lagrange(
    nodes: FloatArray, x: FloatArray
) -> tuple[IntArray, FloatArray]:
    """Four-point Lagrange stencil on sorted nonuniform nodes.

    Points outside ``[nodes[0], nodes[-1]]`` are clamped onto the end nodes.
    """
    nodes = np.asarray(nodes, dtype=float)
    m = nodes.size
    if m < 4:
        msg = f"Need at least 4 nodes for a cubic stencil, got {m}"
        raise ValueError(msg)
    xc = np.clip(np.asarray(x, dtype=float), nodes[0], nodes[-1])
    j = np.clip(np.searchsorted(nodes, xc) - 1, 1, m - 3)
    idx = j[..., None] + np.asarray(_CUBIC_OFFSETS)
    stencil = nodes[idx]
    weights = np.ones(idx.shape)
    for a in range(4):
        for b in range(4):
            if a != b:
                gap = stencil[..., a] - stencil[..., b]
                weights[..., a] *= (xc - stencil[..., b]) / gap
    return idx.astype(np.int64), weights


# =============================================================================
# PUBLIC API - Pointwise jets
# =============================================================================


def jet(
    f: Callable[[FloatArray], Array], points: FloatArray, step: float = 1e-3
) -> tuple[Array, Array, Array]:
    """Value, first partials and pure second partials of a callable.

    Both derivatives use fourth-order central stencils along each axis.

    Args:
        f: Callable mapping ``(m, d)`` points to ``(m,)`` values.
        points: Evaluation points of shape ``(m, d)``.
        step: Stencil step.

    Returns:
        ``(value, partials, second)`` with shapes ``(m,)``, ``(m, d)``, ``(m, d)``.

    Examples:
        >>> value, grad, second = jet(lambda x: x[:, 0] ** 2, np.array([[1.0, 0.0]]))
        >>> round(float(grad[0, 0]), 8), round(float(second[0, 0]), 6)
        (2.0, 2.0)
    """
    x = np.asarray(points, dtype=float)
    value = np.asarray(f(x))
    firsts = []
    seconds = []
    for axis in range(x.shape[-1]):
        shift = np.zeros(x.shape[-1])
        shift[axis] = step
        p1, m1 = np.asarray(f(x + shift)), np.asarray(f(x - shift))
        p2, m2 = np.asarray(f(x + 2 * shift)), np.asarray(f(x - 2 * shift))
        firsts.append((m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * step))
        seconds.append(
            (-p2 + 16.0 * p1 - 30.0 * value + 16.0 * m1 - m2) / (12.0 * step**2)
        )
    return value, np.stack(firsts, axis=-1), np.stack(seconds, axis=-1)


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _outer(*vectors: FloatArray) -> FloatArray:
    result = np.asarray(vectors[0], dtype=float)
    for v in vectors[1:]:
        result = np.multiply.outer(result, v)
    return result
