"""Conjugate gradients with a residual-plateau stop."""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from collections.abc import Callable
from dataclasses import dataclass, field

# Third-party
import numpy as np

# Project/Local
from .._internal import get_logger
from ..constants import CG_MAX_ITER, CG_PLATEAU_GAIN, CG_PLATEAU_WINDOW, CG_TOLERANCE
from ..exceptions import NonconvergenceError
from ..protocols import FloatArray

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
LinearOperator = Callable[[FloatArray], FloatArray]


# =============================================================================
# CORE CLASSES
# =============================================================================


@dataclass(frozen=True)
class CGResult:
    """Solution and convergence history of a CG solve.

    Attributes:
        solution: Final iterate.
        residual: Final relative residual ``|b - A x| / |b|``.
        iterations: Iterations performed.
        history: Relative residual after every iteration.
    """

    solution: FloatArray
    residual: float
    iterations: int
    history: list[float] = field(default_factory=list)


# =============================================================================
# PUBLIC API
# =============================================================================


def conjugate_gradient(
    apply: LinearOperator,
    rhs: FloatArray,
    tol: float = CG_TOLERANCE,
    max_iter: int = CG_MAX_ITER,
    *,
    inner: Callable[[FloatArray, FloatArray], float] | None = None,
    plateau_window: int = CG_PLATEAU_WINDOW,
    plateau_gain: float = CG_PLATEAU_GAIN,
    accept_residual: float | None = None,
) -> CGResult:
    """Solve ``A x = b`` for a symmetric positive semidefinite ``A`` from ``x = 0``.

    A plateau is an error unless the best residual seen so far is already at
    or below ``accept_residual``; the best iterate is then returned. The same
    applies when the budget runs out.

    Args:
        apply: The operator ``x -> A x``; self-adjoint in ``inner``.
        rhs: Right-hand side.
        tol: Relative residual to reach.
        max_iter: Iteration budget.
        inner: Inner product (default Euclidean).
        plateau_window: Iterations over which the best residual must improve.
        plateau_gain: Required relative improvement over the window.
        accept_residual: Residual at which a stalled solve still counts as
            converged (``None``: only ``tol`` counts).

    Returns:
        The result; a zero right-hand side returns zero after no iterations.

    Raises:
        NonconvergenceError: On a residual plateau, a breakdown, or when the
            budget runs out above ``tol`` and ``accept_residual``.

    Examples:
        >>> a = np.diag([1.0, 2.0, 4.0])
        >>> result = conjugate_gradient(lambda x: a @ x, np.ones(3))
        >>> np.round(result.solution, 12)
        array([1.  , 0.5 , 0.25])
    """
    dot = inner if inner is not None else _euclidean
    floor = tol if accept_residual is None else max(tol, accept_residual)
    b = np.asarray(rhs, dtype=float)
    x = np.zeros_like(b)
    b_norm = float(np.sqrt(dot(b, b)))
    if b_norm == 0.0:
        return CGResult(solution=x, residual=0.0, iterations=0)

    r = b.copy()
    p = r.copy()
    rr = dot(r, r)
    history: list[float] = []
    best_x, best_res = x, 1.0
    for it in range(1, max_iter + 1):
        ap = apply(p)
        curvature = dot(p, ap)
        if curvature <= 0.0:
            res = float(np.sqrt(rr)) / b_norm
            if res <= floor:
                return CGResult(x, res, it - 1, history)
            msg = f"CG breakdown at iteration {it} (p^T A p = {curvature:.3g})"
            raise NonconvergenceError(msg, residual=res, iterations=it)
        step = rr / curvature
        x = x + step * p
        r = r - step * ap
        rr_new = dot(r, r)
        res = float(np.sqrt(rr_new)) / b_norm
        history.append(res)
        if res < best_res:
            best_x, best_res = x, res
        if res <= tol:
            logger.debug("CG converged in %d iterations (residual %.3g)", it, res)
            return CGResult(x, res, it, history)
        if _plateau(history, plateau_window, plateau_gain):
            if best_res <= floor:
                logger.debug(
                    "CG stalled at %.3g after %d iterations; accepted", best_res, it
                )
                return CGResult(best_x, best_res, it, history)
            msg = (
                f"CG residual stalled at {res:.3g} over the last "
                f"{plateau_window} iterations"
            )
            raise NonconvergenceError(msg, residual=res, iterations=it)
        p = r + (rr_new / rr) * p
        rr = rr_new

    if best_res <= floor:
        return CGResult(best_x, best_res, max_iter, history)
    res = history[-1] if history else 1.0
    msg = f"CG did not reach {tol:.3g} in {max_iter} iterations (residual {res:.3g})"
    raise NonconvergenceError(msg, residual=res, iterations=max_iter)


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _euclidean(a: FloatArray, b: FloatArray) -> float:
    return float(np.dot(a, b))


def _plateau(history: list[float], window: int, gain: float) -> bool:
    if len(history) <= window:
        return False
    before = min(history[:-window])
    recent = min(history[-window:])
    return recent > (1.0 - gain) * before
