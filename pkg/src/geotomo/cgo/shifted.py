"""The shifted inverse ``G_{0,t}`` of ``-Delta_{g,t}`` on the extended cylinder.

In the x1-Fourier x transversal eigenbasis the discrete operator is diagonal
with symbol ``(2 - 2 cos(xi h1)) / h1^2 - t^2 - 2 i t sin(xi h1) / h1 + mu``,
so the inverse, its adjoint and its ``L^2 -> H^s`` norms are exact.

The x1 direction is solved by FFT symbol division on the closed interval
instead of a banded solve with Dirichlet ends. The closure changes which x1
frequencies exist; the antiperiodic one has no zero frequency, so the
worst-case ``1/tau`` scaling of ``G_{0,tau}`` comes from resonances
``mu_k + xi^2 ~ tau^2`` at the lowest frequency ``xi = pi / L``. A ladder
must keep ``tau^2`` well inside the resolved transversal spectrum for those
resonances to exist on the grid.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from collections.abc import Callable, Sequence
from typing import Any, TypeVar

# Third-party
import numpy as np

# Project/Local
from .._internal import get_logger, log_stage
from ..constants import (
    EXCEPTIONAL_CONDITION,
    TAU_MAX_RETRIES,
    TAU_MIN_G0,
    TAU_RETRY_FACTOR,
)
from ..exceptions import ConfigError, ExceptionalTauError, PreconditionError
from ..rates import RateReport, check_ladder, rate_report
from .cylinder import ComplexArray, ExtendedCylinder

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
T = TypeVar("T")

NORM_SLOPE_BAND = 0.15

# Largest tau^2 of a norm ladder relative to the top transversal eigenvalue
RESOLVED_SPECTRUM_FRACTION = 0.5


# =============================================================================
# CORE CLASSES
# =============================================================================


class ShiftedInverse:
    """``G_{0,t}`` with the exceptional-parameter check.

    Args:
        cylinder: The extended cylinder.
        t: Conjugation parameter; ``|t|`` must be at least ``tau_min``.
        tau_min: Smallest admissible ``|t|``.

    Raises:
        PreconditionError: If ``|t| < tau_min``.
        ExceptionalTauError: If the symbol's condition number exceeds the
            threshold (``t`` lies too close to the exceptional set).

    Example:
        >>> cyl = ExtendedCylinder(n_x1=16, spacing=0.125)
        >>> g0 = ShiftedInverse(cyl, 8.0)
        >>> f = cyl.restrict(np.ones(cyl.shape, dtype=complex))
        >>> bool(cyl.norm(cyl.shifted_apply(g0(f), 8.0) - f) < 1e-10 * cyl.norm(f))
        True
    """

    def __init__(
        self,
        cylinder: ExtendedCylinder,
        t: float,
        tau_min: float = TAU_MIN_G0,
        condition_limit: float = EXCEPTIONAL_CONDITION,
    ) -> None:
        if abs(t) < tau_min:
            msg = f"|tau| = {abs(t):.4g} is below the minimum {tau_min:.4g}"
            raise PreconditionError(msg)
        self.cylinder = cylinder
        self.t = float(t)
        mu = cylinder.basis.eigenvalues
        symbol = (
            cylinder.second_symbol[:, None]
            - self.t**2
            - 2j * self.t * cylinder.first_symbol[:, None]
            + mu[None, :]
        )
        magnitude = np.abs(symbol)
        condition = float(magnitude.max() / max(magnitude.min(), 1e-300))
        if condition > condition_limit:
            msg = (
                f"Shifted operator is numerically singular at tau={t:.10g} "
                f"(condition {condition:.3g})"
            )
            raise ExceptionalTauError(msg, tau=abs(self.t), condition=condition)
        self.symbol = symbol
        self.condition = condition
        self._weight2 = 1.0 + cylinder.second_symbol[:, None] + mu[None, :]

    def __call__(self, f: Any) -> ComplexArray:
        cyl = self.cylinder
        return cyl.restrict(cyl.from_modes(cyl.to_modes(f) / self.symbol))

    def adjoint(self, f: Any) -> ComplexArray:
        cyl = self.cylinder
        return cyl.restrict(cyl.from_modes(cyl.to_modes(f) / np.conj(self.symbol)))

    def operator(self, u: Any) -> ComplexArray:
        """The discrete ``-Delta_{g,t}`` this object inverts."""
        return self.cylinder.shifted_apply(u, self.t)

    def norm(self, s: int = 0) -> float:
        """Exact ``||G_{0,t}||_{L^2 -> H^s}`` with the spectral ``H^s`` norm."""
        ratio = self._weight2 ** (0.5 * s) / np.abs(self.symbol)
        return float(ratio.max())


# =============================================================================
# PUBLIC API
# =============================================================================


def shifted_inverse_g0(cylinder: ExtendedCylinder, tau: float, rhs: Any) -> Any:
    """Solve ``-Delta_{g,tau} w = rhs`` on the extended cylinder.

    Raises:
        PreconditionError: If ``|tau| < 4``.
        ExceptionalTauError: If ``tau`` is numerically exceptional.
    """
    return ShiftedInverse(cylinder, tau)(rhs)


def solve_with_retry(
    build: Callable[[float], T],
    tau: float,
    factor: float = TAU_RETRY_FACTOR,
    max_retries: int = TAU_MAX_RETRIES,
) -> tuple[T, float]:
    """Call ``build(tau)``, nudging ``tau *= 1 + factor`` on exceptional values.

    Returns:
        The result and the ``tau`` actually used.

    Raises:
        ExceptionalTauError: If every attempt was exceptional.
    """
    current = float(tau)
    attempt = 0
    while True:
        try:
            return build(current), current
        except ExceptionalTauError as exc:
            if attempt >= max_retries:
                raise
            nudged = current * (1.0 + factor)
            logger.warning(
                "Exceptional tau %.10g (condition %.3g); retrying with %.10g",
                current,
                exc.condition,
                nudged,
            )
            current = nudged
            attempt += 1


def g0_norm_ladder(
    cylinder: ExtendedCylinder,
    taus: Sequence[float],
    band: float = NORM_SLOPE_BAND,
) -> list[RateReport]:
    """Slopes of ``||G_{0,tau}||_{L^2 -> H^s}`` for s in {0, 1, 2}.

    Each slope must lie within ``band`` of ``s - 1``. Exceptional ladder points
    are nudged.

    Raises:
        ConfigError: If the ladder is not geometric with at least five points,
            or its top reaches past the resolved transversal spectrum.
    """
    ladder = check_ladder(taus)
    ceiling = RESOLVED_SPECTRUM_FRACTION * float(cylinder.basis.eigenvalues.max())
    if max(ladder) ** 2 > ceiling:
        msg = (
            f"tau ladder top {max(ladder):.4g} exceeds the resolved spectrum "
            f"(tau^2 <= {ceiling:.4g}); refine the transversal spacing"
        )
        raise ConfigError(msg)
    log_stage(logger, "g0_norm_ladder", taus=ladder)
    norms: dict[int, list[float]] = {0: [], 1: [], 2: []}
    used: list[float] = []
    for tau in ladder:
        inverse, actual = solve_with_retry(
            lambda t: ShiftedInverse(cylinder, t), tau
        )
        used.append(actual)
        for s in norms:
            norms[s].append(inverse.norm(s))
    return [
        rate_report(
            f"G0.L2->H{s}",
            used,
            norms[s],
            float(s - 1),
            band,
            require_monotone=False,
            lower_slack=band,
        )
        for s in (0, 1, 2)
    ]
