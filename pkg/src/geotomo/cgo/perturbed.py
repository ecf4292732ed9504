"""The perturbed inverse ``G_t`` by a Neumann series around ``G_{0,t}``.

``P_t = -Delta_{g,t} + <B, grad_g> + q~`` is inverted as ``G_{0,t} (I + K)^-1``
with ``K = (<B, grad_g> + q~) G_{0,t}``, which requires ``||K|| < 1``.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from collections.abc import Callable
from typing import Any

# Third-party
import numpy as np

# Project/Local
from .._internal import get_logger, log_stage
from ..constants import (
    DEFAULT_SEED,
    NEUMANN_MAX_TERMS,
    NEUMANN_TOLERANCE,
    OPERATOR_RESIDUAL_TOLERANCE,
    POWER_ITERATIONS,
)
from ..exceptions import NeumannDivergenceError, NonconvergenceError
from .conjugation import ConjugatedOperator
from .cylinder import ComplexArray, ExtendedCylinder
from .shifted import ShiftedInverse

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)


# =============================================================================
# CORE CLASSES
# =============================================================================


class PerturbedInverse:
    """``G_t`` for a conjugated operator.

    Args:
        operator: The conjugated operator ``P_t``.
        g0: Shifted inverse at the same ``t`` (built when omitted).
        seed: Seed of the power-iteration start vector.

    Raises:
        NeumannDivergenceError: If the measured ``||K||`` is at least one.
    """

    def __init__(
        self,
        operator: ConjugatedOperator,
        g0: ShiftedInverse | None = None,
        seed: int = DEFAULT_SEED,
    ) -> None:
        self.operator = operator
        if g0 is None:
            g0 = ShiftedInverse(operator.cylinder, operator.t)
        self.g0 = g0
        if self.g0.t != operator.t:
            msg = f"Shifted inverse at t={self.g0.t} does not match t={operator.t}"
            raise ValueError(msg)
        self.seed = seed
        self.k_norm = 0.0 if operator.is_free else self._k_norm()
        log_stage(logger, "perturbed_inverse", t=operator.t, k_norm=self.k_norm)
        if self.k_norm >= 1.0:
            msg = (
                f"||K|| = {self.k_norm:.4g} >= 1 at tau={operator.tau:.4g}; "
                "increase tau"
            )
            raise NeumannDivergenceError(msg, norm=self.k_norm)

    @property
    def cylinder(self) -> ExtendedCylinder:
        return self.operator.cylinder

    def k_apply(self, v: Any) -> ComplexArray:
        return self.operator.perturbation(self.g0(v))

    def k_adjoint(self, v: Any) -> ComplexArray:
        return self.g0.adjoint(self.operator.perturbation_adjoint(v))

    def __call__(self, f: Any) -> ComplexArray:
        """``G_t f``, checked against ``||P_t G_t f - f|| <= 1e-6 ||f||``.

        Raises:
            NonconvergenceError: If the operator residual exceeds the bound.
        """
        rhs = self.cylinder.restrict(np.asarray(f, dtype=complex))
        g = self._neumann(self.k_apply, rhs)
        solution = self.g0(g)
        scale = self.cylinder.norm(rhs)
        residual = self.cylinder.norm(self.operator.apply(solution) - rhs)
        if scale > 0.0 and residual > OPERATOR_RESIDUAL_TOLERANCE * scale:
            msg = f"Perturbed inverse residual {residual / scale:.3g} (relative)"
            raise NonconvergenceError(msg, residual=residual / scale, iterations=0)
        return solution

    def adjoint(self, f: Any) -> ComplexArray:
        """``G_t^* f = (I + K^*)^-1 G_{0,t}^* f``."""
        start = self.g0.adjoint(f)
        return self._neumann(self.k_adjoint, start)

    def norm(self, iterations: int = POWER_ITERATIONS) -> float:
        """``||G_t||_{L^2 -> L^2}`` by power iteration on ``G_t^* G_t``."""
        return _power_norm(self.cylinder, self, self.adjoint, iterations, self.seed)

    def _k_norm(self) -> float:
        return _power_norm(
            self.cylinder, self.k_apply, self.k_adjoint, POWER_ITERATIONS, self.seed
        )

    def _neumann(
        self, apply: Callable[[Any], ComplexArray], rhs: ComplexArray
    ) -> ComplexArray:
        """``sum_j (-apply)^j rhs`` until the increment is negligible."""
        cyl = self.cylinder
        scale = cyl.norm(rhs)
        total = rhs.copy()
        term = rhs
        if self.operator.is_free or scale == 0.0:
            return total
        for _ in range(NEUMANN_MAX_TERMS):
            term = -apply(term)
            total = total + term
            if cyl.norm(term) <= NEUMANN_TOLERANCE * scale:
                return total
        logger.warning(
            "Neumann series truncated after %d terms (increment %.3g)",
            NEUMANN_MAX_TERMS,
            cyl.norm(term) / scale,
        )
        return total


# =============================================================================
# PUBLIC API
# =============================================================================


def perturbed_inverse_g(operator: ConjugatedOperator, rhs: Any) -> ComplexArray:
    """Solve ``P_t w = rhs`` by the Neumann series.

    Raises:
        NeumannDivergenceError: If ``||K|| >= 1``.
        NonconvergenceError: If the operator residual contract fails.
    """
    return PerturbedInverse(operator)(rhs)


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _power_norm(
    cylinder: ExtendedCylinder,
    apply: Callable[[Any], ComplexArray],
    adjoint: Callable[[Any], ComplexArray],
    iterations: int,
    seed: int,
) -> float:
    """``sqrt`` of the top eigenvalue of ``apply^* apply`` by power iteration."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(cylinder.shape) + 1j * rng.standard_normal(cylinder.shape)
    v = cylinder.restrict(v)
    v = v / cylinder.norm(v)
    estimate = 0.0
    for _ in range(iterations):
        w = adjoint(apply(v))
        size = cylinder.norm(w)
        if size == 0.0:
            return 0.0
        estimate = float(np.sqrt(size))
        v = w / size
    return estimate
