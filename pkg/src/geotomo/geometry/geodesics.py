"""Geodesic flow on a metric chart.

Geodesics are integrated with a fixed-step classical RK4 scheme on the
first-order system ``x' = xi``, ``xi'^k = -Gamma^k_ij xi^i xi^j``; ``xi`` is
renormalized to unit g-length after every step. Exits are localized by
bisection on the length of the last substep.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import math
from dataclasses import dataclass, field
from typing import Any, Protocol

# Third-party
import numpy as np
import scipy.sparse as sp

# Project/Local
from .._internal import get_logger, log_stage
from .._internal.parallel import map_chunks, split_rows, worker_count
from ..constants import (
    CHRISTOFFEL_STEP_SCALE,
    DEFAULT_GEODESIC_STEP,
    EXIT_BISECTION_MAX,
    EXIT_TOLERANCE,
    MAX_TIME_FACTOR,
)
from ..exceptions import DomainError, TrappedGeodesicError
from ..grids import IntArray
from ..protocols import FloatArray, MetricChart
from .charts import metric_norm2, normalize

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
_CHUNK_ROWS = 8192


class RayIntegrand(Protocol):
    """``f(t, x, xi)`` evaluated on flat node arrays."""

    def __call__(self, t: FloatArray, x: FloatArray, xi: FloatArray) -> Any: ...


# =============================================================================
# CORE CLASSES
# =============================================================================


@dataclass(frozen=True)
class PhaseState:
    """A point of the unit sphere bundle.

    Attributes:
        x: Chart coordinates.
        xi: Tangent vector at ``x`` with unit g-length.
    """

    x: FloatArray
    xi: FloatArray

    @classmethod
    def unit(cls, chart: MetricChart, x: Any, xi: Any) -> PhaseState:
        """Build a state, rescaling ``xi`` to unit g-length."""
        xa = np.asarray(x, dtype=float)
        va = np.asarray(xi, dtype=float)
        return cls(x=xa, xi=normalize(chart, xa, va))


@dataclass(frozen=True)
class GeodesicTrace:
    """Samples of one geodesic from its start to its exit.

    The last sample is the exit point.
    """

    t: FloatArray
    x: FloatArray
    xi: FloatArray
    exit_time: float
    exit_point: FloatArray
    exit_direction: FloatArray

    def as_rows(self) -> list[dict[str, float]]:
        """CSV rows with columns ``t, x1..xd, xi1..xid``."""
        dim = self.x.shape[-1]
        rows: list[dict[str, float]] = []
        for k in range(self.t.size):
            row = {"t": float(self.t[k])}
            row |= {f"x{i + 1}": float(self.x[k, i]) for i in range(dim)}
            row |= {f"xi{i + 1}": float(self.xi[k, i]) for i in range(dim)}
            rows.append(row)
        return rows


@dataclass(frozen=True)
class BatchTrace:
    """A batch of traces sharing one step size.

    ``x[b, j]`` is the sample at time ``j * step`` for ``j <= n_full[b]``;
    later slots repeat the exit point. Without samples only ``j = 0`` is kept.
    """

    step: float
    x: FloatArray
    xi: FloatArray
    n_full: IntArray
    exit_time: FloatArray
    exit_point: FloatArray
    exit_direction: FloatArray
    has_samples: bool = True

    def __len__(self) -> int:
        return int(self.exit_time.shape[0])

    def trace(self, b: int) -> GeodesicTrace:
        if not self.has_samples:
            msg = "Batch was traced without samples"
            raise ValueError(msg)
        n = int(self.n_full[b])
        t = np.append(self.step * np.arange(n + 1), self.exit_time[b])
        return GeodesicTrace(
            t=t,
            x=np.vstack([self.x[b, : n + 1], self.exit_point[b]]),
            xi=np.vstack([self.xi[b, : n + 1], self.exit_direction[b]]),
            exit_time=float(self.exit_time[b]),
            exit_point=self.exit_point[b],
            exit_direction=self.exit_direction[b],
        )


@dataclass(frozen=True)
class RayNodes:
    """Quadrature nodes along a batch of rays.

    Each ray is integrated by Simpson's rule on every full RK4 panel plus the
    partial last panel. ``matrix`` maps node values to per-ray integrals.
    """

    points: FloatArray
    directions: FloatArray
    times: FloatArray
    rows: IntArray
    matrix: sp.csr_matrix = field(repr=False)

    @property
    def n_rays(self) -> int:
        return int(self.matrix.shape[0])

    def integrate(self, integrand: RayIntegrand) -> Any:
        """Per-ray integral of ``integrand(t, x, xi)``."""
        values = integrand(self.times, self.points, self.directions)
        return self.matrix @ np.asarray(values)

    def weighted(self, node_factor: FloatArray) -> sp.csr_matrix:
        """Quadrature matrix with every column scaled by ``node_factor``."""
        return (self.matrix @ sp.diags(node_factor)).tocsr()


# =============================================================================
# PUBLIC API
# =============================================================================


def christoffel(chart: MetricChart, x: Any) -> FloatArray:
    """Christoffel symbols ``Gamma[..., k, i, j]`` by central differences of g.

    Args:
        chart: Metric chart.
        x: Points of shape ``(..., dim)`` inside the enlarged chart.

    Returns:
        Array of shape ``(..., dim, dim, dim)``, symmetric in ``(i, j)``.

    Raises:
        DomainError: If a point lies outside the enlarged chart.

    Examples:
        >>> from geotomo.geometry.charts import ConformalDisc
        >>> float(np.abs(christoffel(ConformalDisc(), np.array([0.2, 0.1]))).max())
        0.0
    """
    pts = np.asarray(x, dtype=float)
    outside = chart.boundary_sdf(pts) > chart.margin
    if np.any(outside):
        msg = (
            f"{int(np.sum(outside))} points outside the enlarged chart "
            f"(margin {chart.margin})"
        )
        raise DomainError(msg)
    return _symbols(chart, pts)


def geodesic_trace(
    chart: MetricChart,
    start: PhaseState,
    step: float = DEFAULT_GEODESIC_STEP,
    max_time: float | None = None,
) -> GeodesicTrace:
    """Trace one geodesic until it leaves the chart.

    Raises:
        TrappedGeodesicError: If it has not exited after ``max_time``.

    Examples:
        >>> from geotomo.geometry.charts import ConformalDisc
        >>> disc = ConformalDisc()
        >>> start = PhaseState.unit(disc, [-1.0, 0.0], [1.0, 0.0])
        >>> round(geodesic_trace(disc, start).exit_time, 8)
        2.0
    """
    batch = trace_batch(
        chart, start.x[None, :], start.xi[None, :], step=step, max_time=max_time
    )
    return batch.trace(0)


def trace_batch(
    chart: MetricChart,
    x0: Any,
    xi0: Any,
    step: float = DEFAULT_GEODESIC_STEP,
    max_time: float | None = None,
    *,
    keep_samples: bool = True,
    workers: int | None = None,
) -> BatchTrace:
    """Trace a batch of geodesics until each leaves the chart.

    Starts may lie on the boundary with an inward direction; a ray whose
    chord is shorter than one step is handled by the exit bisection.

    Args:
        chart: Metric chart.
        x0: Start points ``(B, dim)``.
        xi0: Start directions ``(B, dim)`` (rescaled to unit length).
        step: RK4 step.
        max_time: Time budget (default ``MAX_TIME_FACTOR * chart.scale``).
        keep_samples: Store every step (needed for ray quadrature).
        workers: Thread cap (default from ``GEOTOMO_THREADS``).

    Raises:
        TrappedGeodesicError: If any ray has not exited within the budget.
    """
    if step <= 0.0:
        msg = f"Step must be positive, got {step}"
        raise ValueError(msg)
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    xi0 = np.atleast_2d(np.asarray(xi0, dtype=float))
    budget = MAX_TIME_FACTOR * chart.scale if max_time is None else max_time
    n_rays = x0.shape[0]
    jobs = worker_count() if workers is None else workers
    parts = max(jobs, math.ceil(n_rays / _CHUNK_ROWS))
    log_stage(logger, "trace_batch", n_rays=n_rays, step=step, parts=parts)

    def run(rows: slice) -> BatchTrace:
        return _trace_rows(chart, x0[rows], xi0[rows], step, budget, keep_samples)

    pieces = map_chunks(run, split_rows(n_rays, parts), workers=jobs)
    return pieces[0] if len(pieces) == 1 else _merge(pieces)


def ray_nodes(chart: MetricChart, batch: BatchTrace) -> RayNodes:
    """Simpson nodes and weights along every ray of a traced batch.

    Full panels use the cubic Hermite midpoint of their end samples; the
    partial last panel takes an RK4 half step.
    """
    if not batch.has_samples:
        msg = "Ray quadrature needs a batch traced with samples"
        raise ValueError(msg)
    h = batch.step
    n_rays, n_slots, _ = batch.x.shape
    n_full = batch.n_full.astype(np.int64)
    j = np.arange(n_slots)
    valid = j[None, :] <= n_full[:, None]
    partial = batch.exit_time - n_full * h

    sample_w = (h / 6.0) * (
        ((j[None, :] >= 1) & valid).astype(float)
        + (j[None, :] < n_full[:, None]).astype(float)
    )
    sample_w[np.arange(n_rays), n_full] += partial / 6.0
    rows_s, cols_s = np.nonzero(valid)

    x0, x1 = batch.x[:, :-1], batch.x[:, 1:]
    v0, v1 = batch.xi[:, :-1], batch.xi[:, 1:]
    mid_x = 0.5 * (x0 + x1) + h * (v0 - v1) / 8.0
    mid_v = 1.5 * (x1 - x0) / h - 0.25 * (v0 + v1)
    mid_valid = j[None, :-1] < n_full[:, None]
    rows_m, cols_m = np.nonzero(mid_valid)
    mx = mid_x[rows_m, cols_m]
    mv = normalize(chart, mx, mid_v[rows_m, cols_m])

    last = np.arange(n_rays)
    px, pv = rk4_step(
        chart, batch.x[last, n_full], batch.xi[last, n_full], 0.5 * partial
    )
    pv = normalize(chart, px, pv)

    points = np.concatenate(
        [batch.x[rows_s, cols_s], mx, px, batch.exit_point], axis=0
    )
    directions = np.concatenate(
        [batch.xi[rows_s, cols_s], mv, pv, batch.exit_direction], axis=0
    )
    times = np.concatenate(
        [
            h * cols_s,
            h * (cols_m + 0.5),
            n_full * h + 0.5 * partial,
            batch.exit_time,
        ]
    )
    rows = np.concatenate([rows_s, rows_m, last, last])
    weights = np.concatenate(
        [
            sample_w[rows_s, cols_s],
            np.full(rows_m.size, 4.0 * h / 6.0),
            4.0 * partial / 6.0,
            partial / 6.0,
        ]
    )
    matrix = sp.coo_matrix(
        (weights, (rows, np.arange(rows.size))), shape=(n_rays, rows.size)
    ).tocsr()
    return RayNodes(
        points=points,
        directions=directions,
        times=times,
        rows=rows,
        matrix=matrix,
    )


def rk4_step(
    chart: MetricChart, x: FloatArray, v: FloatArray, h: Any
) -> tuple[FloatArray, FloatArray]:
    """One classical RK4 step of the geodesic system; ``h`` may vary per row."""
    hh = np.asarray(h, dtype=float)
    if hh.ndim:
        hh = hh[..., None]
    k1x, k1v = v, _acceleration(chart, x, v)
    x2, v2 = x + 0.5 * hh * k1x, v + 0.5 * hh * k1v
    k2x, k2v = v2, _acceleration(chart, x2, v2)
    x3, v3 = x + 0.5 * hh * k2x, v + 0.5 * hh * k2v
    k3x, k3v = v3, _acceleration(chart, x3, v3)
    x4, v4 = x + hh * k3x, v + hh * k3v
    k4x, k4v = v4, _acceleration(chart, x4, v4)
    x_new = x + hh * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0
    v_new = v + hh * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
    return x_new, v_new


def integrate_geodesic(
    chart: MetricChart,
    x: Any,
    xi: Any,
    t_final: float,
    step: float = DEFAULT_GEODESIC_STEP,
) -> tuple[FloatArray, FloatArray]:
    """Flow ``(x, xi)`` for time ``t_final`` with no boundary checks.

    The step is shrunk so that a whole number of steps lands on ``t_final``.
    """
    n_steps = max(1, math.ceil(t_final / step - 1e-12))
    h = t_final / n_steps
    xa = np.asarray(x, dtype=float)
    va = normalize(chart, xa, np.asarray(xi, dtype=float))
    for _ in range(n_steps):
        xa, va = rk4_step(chart, xa, va, h)
        va = normalize(chart, xa, va)
    return xa, va


def step_order(
    chart: MetricChart,
    x: Any,
    xi: Any,
    t_final: float = 1.0,
    steps: tuple[float, float, float] = (0.1, 0.05, 0.025),
) -> float:
    """Observed convergence order from three successively halved steps.

    Examples:
        >>> from geotomo.geometry.charts import ConformalDisc
        >>> cap = ConformalDisc(radius=1.0, curvature=1.0)
        >>> 3.5 <= step_order(cap, [-0.5, 0.1], [1.0, 0.3]) <= 4.5
        True
    """
    ends = [integrate_geodesic(chart, x, xi, t_final, h)[0] for h in steps]
    coarse = float(np.linalg.norm(ends[0] - ends[1]))
    fine = float(np.linalg.norm(ends[1] - ends[2]))
    ratio = steps[0] / steps[1]
    return math.log(coarse / fine) / math.log(ratio)


def time_reversal_check(
    chart: MetricChart,
    x: Any,
    xi: Any,
    step: float = DEFAULT_GEODESIC_STEP,
) -> float:
    """Worst mismatch when boundary rays are traced forward and back.

    Each ray ``(p, xi)`` is traced to its exit ``(q, eta)``; the ray
    ``(q, -eta)`` must return to ``p`` after the same time.

    Returns:
        ``max(|tau - tau_back|, |p - p_back|)`` over the batch.
    """
    forward = trace_batch(chart, x, xi, step, keep_samples=False)
    back = trace_batch(
        chart,
        forward.exit_point,
        -forward.exit_direction,
        step,
        keep_samples=False,
    )
    start = np.atleast_2d(np.asarray(x, dtype=float))
    time_err = np.abs(forward.exit_time - back.exit_time)
    point_err = np.linalg.norm(back.exit_point - start, axis=-1)
    return float(np.max(np.maximum(time_err, point_err)))


def unit_speed_drift(chart: MetricChart, trace: GeodesicTrace) -> float:
    """``max | |xi|_g^2 - 1 |`` over the samples of a trace."""
    return float(np.max(np.abs(metric_norm2(chart, trace.x, trace.xi) - 1.0)))


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _symbols(chart: MetricChart, x: FloatArray) -> FloatArray:
    dim = x.shape[-1]
    h = CHRISTOFFEL_STEP_SCALE * chart.scale
    # dg[..., a, b, c] = d_c g_ab
    slopes = []
    for c in range(dim):
        shift = np.zeros(dim)
        shift[c] = h
        slopes.append((chart.g_eval(x + shift) - chart.g_eval(x - shift)) / (2.0 * h))
    dg = np.stack(slopes, axis=-1)
    ginv = np.linalg.inv(chart.g_eval(x))
    lowered = dg + np.swapaxes(dg, -1, -2) - np.einsum("...ijm->...mij", dg)
    return 0.5 * np.einsum("...km,...mij->...kij", ginv, lowered)


def _acceleration(chart: MetricChart, x: FloatArray, v: FloatArray) -> FloatArray:
    gamma = _symbols(chart, x)
    return -np.einsum("...kij,...i,...j->...k", gamma, v, v)


def _locate_exit(
    chart: MetricChart, x: FloatArray, v: FloatArray, h: float
) -> tuple[FloatArray, FloatArray, FloatArray]:
    """Bisect the substep length ``s`` in ``(0, h]`` at which sdf turns positive."""
    lo = np.zeros(x.shape[0])
    hi = np.full(x.shape[0], h)
    for _ in range(EXIT_BISECTION_MAX):
        if np.max(hi - lo) <= EXIT_TOLERANCE:
            break
        mid = 0.5 * (lo + hi)
        xm, _ = rk4_step(chart, x, v, mid)
        out = chart.boundary_sdf(xm) > 0.0
        hi = np.where(out, mid, hi)
        lo = np.where(out, lo, mid)
    s = 0.5 * (lo + hi)
    xe, ve = rk4_step(chart, x, v, s)
    return s, xe, normalize(chart, xe, ve)


def _trace_rows(
    chart: MetricChart,
    x0: FloatArray,
    xi0: FloatArray,
    h: float,
    max_time: float,
    keep_samples: bool,
) -> BatchTrace:
    n_rays, dim = x0.shape
    x = x0.copy()
    v = normalize(chart, x, xi0)
    n_full = np.zeros(n_rays, dtype=np.int64)
    exit_time = np.zeros(n_rays)
    exit_point = np.zeros((n_rays, dim))
    exit_dir = np.zeros((n_rays, dim))
    active = np.ones(n_rays, dtype=bool)
    xs, vs = [x.copy()], [v.copy()]
    max_steps = math.ceil(max_time / h)

    n_steps = 0
    while np.any(active):
        if n_steps >= max_steps:
            n_trapped = int(active.sum())
            msg = f"{n_trapped} geodesics did not exit within time {max_time:.6g}"
            raise TrappedGeodesicError(msg, max_time=max_time, n_trapped=n_trapped)
        idx = np.flatnonzero(active)
        xn, vn = rk4_step(chart, x[idx], v[idx], h)
        vn = normalize(chart, xn, vn)
        out = chart.boundary_sdf(xn) > 0.0

        stay = idx[~out]
        x[stay], v[stay] = xn[~out], vn[~out]
        n_full[stay] += 1

        leaving = idx[out]
        if leaving.size:
            s, xe, ve = _locate_exit(chart, x[leaving], v[leaving], h)
            exit_time[leaving] = n_full[leaving] * h + s
            exit_point[leaving], exit_dir[leaving] = xe, ve
            active[leaving] = False
        n_steps += 1
        if keep_samples:
            xs.append(x.copy())
            vs.append(v.copy())

    xa, va = np.stack(xs, axis=1), np.stack(vs, axis=1)
    if keep_samples:
        beyond = np.arange(xa.shape[1])[None, :] > n_full[:, None]
        xa = np.where(beyond[..., None], exit_point[:, None, :], xa)
        va = np.where(beyond[..., None], exit_dir[:, None, :], va)
    return BatchTrace(
        step=h,
        x=xa,
        xi=va,
        n_full=n_full,
        exit_time=exit_time,
        exit_point=exit_point,
        exit_direction=exit_dir,
        has_samples=keep_samples,
    )


def _merge(pieces: list[BatchTrace]) -> BatchTrace:
    width = max(p.x.shape[1] for p in pieces)

    def pad(arr: FloatArray, fill: FloatArray) -> FloatArray:
        extra = width - arr.shape[1]
        if extra == 0:
            return arr
        tail = np.repeat(fill[:, None, :], extra, axis=1)
        return np.concatenate([arr, tail], axis=1)

    first = pieces[0]
    return BatchTrace(
        step=first.step,
        x=np.concatenate([pad(p.x, p.exit_point) for p in pieces]),
        xi=np.concatenate([pad(p.xi, p.exit_direction) for p in pieces]),
        n_full=np.concatenate([p.n_full for p in pieces]),
        exit_time=np.concatenate([p.exit_time for p in pieces]),
        exit_point=np.concatenate([p.exit_point for p in pieces]),
        exit_direction=np.concatenate([p.exit_direction for p in pieces]),
        has_samples=first.has_samples,
    )
