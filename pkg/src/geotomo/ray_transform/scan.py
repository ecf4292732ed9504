"""Smooth test families and the empirical attenuation threshold."""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from collections.abc import Sequence
from typing import Any

# Third-party
import numpy as np
from pydantic.dataclasses import dataclass

# Project/Local
from .._internal import get_logger, log_stage
from ..constants import CG_MAX_ITER, DEFAULT_SEED
from ..exceptions import NonconvergenceError
from ..protocols import FloatArray, ScalarField
from .transform import RayTransform, invert_normal

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
RECONSTRUCTION_TOLERANCE = 2e-2
SCAN_CG_TOLERANCE = 1e-6
SCAN_ACCEPT_RESIDUAL = 1e-4
FAMILY_SIZE = 10


# =============================================================================
# CORE CLASSES
# =============================================================================


@dataclass(frozen=True)
class Bump:
    """``amplitude * (1 - |x - c|^2 / w^2)^4`` inside the ball, zero outside.

    The bump is C3, which keeps cubic interpolation along rays at full order.
    """

    center: tuple[float, float]
    width: float
    amplitude: float = 1.0

    def __call__(self, x: FloatArray) -> FloatArray:
        d2 = np.sum((np.asarray(x) - np.asarray(self.center)) ** 2, axis=-1)
        s = np.clip(1.0 - d2 / self.width**2, 0.0, None)
        return self.amplitude * s**4


@dataclass(frozen=True)
class ScanReport:
    """Outcome of ``attenuation_scan``.

    Attributes:
        lambdas: Scanned attenuations, sorted by ``|lambda|``.
        errors: Worst relative L2 reconstruction error per attenuation
            (``inf`` when CG failed).
        succeeded: Per attenuation, CG converged and every error is within
            tolerance.
        largest_stable: Largest ``|lambda|`` such that every scanned value
            of no larger modulus succeeded (0 when none did).
    """

    lambdas: tuple[float, ...]
    errors: tuple[float, ...]
    succeeded: tuple[bool, ...]
    largest_stable: float


# =============================================================================
# PUBLIC API
# =============================================================================


def bump_family(
    radius: float,
    size: int = FAMILY_SIZE,
    seed: int = DEFAULT_SEED,
) -> list[Bump]:
    """A frozen family of bumps supported well inside a disc of ``radius``.

    Examples:
        >>> len(bump_family(1.0, 4, seed=1))
        4
    """
    rng = np.random.default_rng(seed)
    members: list[Bump] = []
    for _ in range(size):
        width = radius * rng.uniform(0.3, 0.5)
        reach = radius - width - 0.1 * radius
        r = reach * np.sqrt(rng.uniform())
        phi = rng.uniform(0.0, 2.0 * np.pi)
        members.append(
            Bump(
                center=(float(r * np.cos(phi)), float(r * np.sin(phi))),
                width=float(width),
                amplitude=float(rng.uniform(0.5, 1.5)),
            )
        )
    return members


def relative_error(transform: RayTransform, estimate: Any, truth: Any) -> float:
    """``|estimate - truth| / |truth|`` in the grid L2 norm."""
    grid = transform.field_grid
    scale = grid.norm(truth)
    diff = grid.norm(np.asarray(estimate) - np.asarray(truth))
    return diff / scale if scale > 0.0 else diff


def reconstruct(
    transform: RayTransform,
    f: ScalarField,
    lam: float,
    tol: float = SCAN_CG_TOLERANCE,
    max_iter: int = CG_MAX_ITER,
    *,
    lambda_max: float = np.inf,
    accept_residual: float = SCAN_ACCEPT_RESIDUAL,
) -> tuple[FloatArray, float]:
    """Invert ``N f`` for a sampled field; returns the estimate and its error.

    The reconstruction error, not the CG residual, decides success, so a
    solve that stalls below ``accept_residual`` is kept.

    Raises:
        NonconvergenceError: Propagated from CG.
    """
    truth = transform.field_grid.sample(f)
    operator = transform.normal(lam)
    result = invert_normal(
        operator,
        operator(truth),
        tol,
        max_iter,
        lambda_max=lambda_max,
        accept_residual=accept_residual,
    )
    return result.solution, relative_error(transform, result.solution, truth)


def attenuation_scan(
    transform: RayTransform,
    fields: Sequence[ScalarField],
    lambdas: Sequence[float],
    *,
    tol: float = SCAN_CG_TOLERANCE,
    error_tolerance: float = RECONSTRUCTION_TOLERANCE,
    max_iter: int = CG_MAX_ITER,
) -> ScanReport:
    """Largest ``|lambda|`` in a list at which CG inversion succeeds.

    Every field is reconstructed from its own normal data at each attenuation.
    The scan never raises for numerical failures; they count as unsuccessful.
    """
    order = sorted(lambdas, key=abs)
    log_stage(logger, "attenuation_scan", n_lambdas=len(order), n_fields=len(fields))
    errors: list[float] = []
    succeeded: list[bool] = []
    for lam in order:
        worst = 0.0
        for f in fields:
            try:
                _, err = reconstruct(transform, f, lam, tol, max_iter)
            except NonconvergenceError as exc:
                logger.warning(
                    "CG failed at lambda=%.4g (residual %.3g)", lam, exc.residual
                )
                worst = float("inf")
                break
            worst = max(worst, err)
        errors.append(worst)
        succeeded.append(worst <= error_tolerance)
        logger.debug("lambda=%.4g worst_error=%.3g", lam, worst)

    largest = 0.0
    for lam, ok in zip(order, succeeded, strict=True):
        if not ok:
            break
        largest = abs(lam)
    return ScanReport(
        lambdas=tuple(float(v) for v in order),
        errors=tuple(errors),
        succeeded=tuple(succeeded),
        largest_stable=largest,
    )
