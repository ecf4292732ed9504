"""Mollified log-conductivity families and their decay rates.

``phi = log(gamma)`` is convolved with a smooth compactly supported bump at
scale ``h(tau) = tau^(-e)``. Vector fields are stored with contravariant
components: ``A = -grad_g phi`` and ``A_tau = -grad_g phi_tau``.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
from collections.abc import Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import Any

# Third-party
import numpy as np
import scipy.signal
from numpy.typing import NDArray

# Project/Local
from .._internal import get_logger, log_stage
from ..constants import (
    DEFAULT_ETA,
    DEFAULT_ETA_PRIME,
    MOLLIFIER_EXPONENT,
    RATE_SLACK,
)
from ..exceptions import DomainError
from ..grids import BoxGrid, DiagonalCalculus
from ..protocols import FloatArray
from ..rates import RateReport, check_ladder, rate_report
from .cylinder import smooth_cutoff

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
# The cusp |x|^(CUSP_BASE_EXPONENT + eta') carries the regularity index eta'
CUSP_BASE_EXPONENT = 1.5
CUSP_EXPONENT = CUSP_BASE_EXPONENT + DEFAULT_ETA_PRIME

QUANTITIES = (
    "A-A_tau.Linf",
    "divA_tau.Linf",
    "A-A_tau.L2",
    "divA_tau.L2",
    "gamma-exp(phi_tau).Linf",
    "grad(gamma-exp(phi_tau)).Linf",
    "q_tau.Linf",
    "q_tau.L2",
)


# =============================================================================
# CORE CLASSES
# =============================================================================


@dataclass(frozen=True)
class MollifiedSnapshot:
    """The family at one ``tau``.

    Attributes:
        tau: Ladder parameter.
        scale: Mollifier radius ``h(tau)``.
        phi_tau: Mollified log-conductivity.
        a_tau: Contravariant components of ``A_tau = -grad_g phi_tau``.
        div_a_tau: ``div_g A_tau``.
        q_tau: ``-div_g A_tau / 2 - |A_tau|^2 / 4 + <A, A_tau> / 2``.
    """

    tau: float
    scale: float
    phi_tau: FloatArray
    a_tau: list[FloatArray]
    div_a_tau: FloatArray
    q_tau: FloatArray


class MollifiedFamily:
    """``tau -> phi_tau`` for a conductivity sampled on a grid.

    Args:
        calc: Calculus of the grid carrying ``gamma``.
        gamma: Positive conductivity with ``gamma - 1`` compactly supported.
        eta: Regularity exponent used by the rate targets.
        exponent: Mollifier scale exponent ``e`` in ``h = tau^(-e)``.
        region: Nodes over which norms are taken (default: all).

    Raises:
        DomainError: If ``gamma`` is not positive everywhere.

    Example:
        >>> grid = BoxGrid.cube(-1.0, 1.0, 41, 2)
        >>> calc = DiagonalCalculus.euclidean(grid)
        >>> family = MollifiedFamily(calc, np.ones((41, 41)))
        >>> float(np.abs(family.snapshot(8.0).phi_tau).max())
        0.0
    """

    def __init__(
        self,
        calc: DiagonalCalculus,
        gamma: Any,
        eta: float = DEFAULT_ETA,
        exponent: float = MOLLIFIER_EXPONENT,
        region: NDArray[np.bool_] | None = None,
    ) -> None:
        values = np.asarray(gamma, dtype=float)
        if values.shape != calc.grid.shape:
            msg = f"Conductivity shape {values.shape} != grid shape {calc.grid.shape}"
            raise ValueError(msg)
        if np.any(values <= 0.0) or not np.all(np.isfinite(values)):
            msg = f"Conductivity must be positive, min value {values.min():.4g}"
            raise DomainError(msg)
        if eta <= 0.0 or exponent <= 0.0:
            msg = f"eta and exponent must be positive, got {eta}, {exponent}"
            raise ValueError(msg)
        self.calc = calc
        self.gamma = values
        self.phi = np.log(values)
        self.eta = float(eta)
        self.exponent = float(exponent)
        self.region = (
            np.ones(values.shape, dtype=bool) if region is None else np.asarray(region)
        )

    @cached_property
    def a_field(self) -> list[FloatArray]:
        """``A = -grad_g log(gamma)``."""
        return [-c for c in self.calc.gradient(self.phi)]

    def scale(self, tau: float) -> float:
        return float(abs(tau) ** -self.exponent)

    def kernel(self, tau: float) -> FloatArray:
        """Bump ``exp(-1 / (1 - |y|^2 / h^2))`` on grid offsets, summing to one."""
        h = self.scale(tau)
        spacing = self.calc.grid.spacing
        reach = [int(h / d) for d in spacing]
        if not any(reach):
            logger.warning(
                "Mollifier scale %.3g is below the grid spacing at tau=%.4g; "
                "phi_tau equals phi",
                h,
                tau,
            )
        axes = [d * np.arange(-n, n + 1) for d, n in zip(spacing, reach, strict=True)]
        offsets = np.meshgrid(*axes, indexing="ij")
        s2 = sum(o**2 for o in offsets) / h**2
        inside = s2 < 1.0
        bump = np.where(inside, np.exp(-1.0 / (1.0 - np.where(inside, s2, 0.0))), 0.0)
        return bump / bump.sum()

    def phi_tau(self, tau: float) -> FloatArray:
        kernel = self.kernel(tau)
        return np.asarray(scipy.signal.fftconvolve(self.phi, kernel, mode="same"))

    def snapshot(self, tau: float) -> MollifiedSnapshot:
        phi_tau = self.phi_tau(tau)
        a_tau = [-c for c in self.calc.gradient(phi_tau)]
        div = self.calc.divergence(a_tau)
        q = (
            -0.5 * div
            - 0.25 * self.calc.dot(a_tau, a_tau)
            + 0.5 * self.calc.dot(self.a_field, a_tau)
        )
        return MollifiedSnapshot(
            tau=float(tau),
            scale=self.scale(tau),
            phi_tau=phi_tau,
            a_tau=a_tau,
            div_a_tau=div,
            q_tau=q,
        )

    def norms(self, tau: float) -> dict[str, float]:
        """The eight measured quantities at one ``tau``, over ``region``."""
        snap = self.snapshot(tau)
        diff_a = [a - b for a, b in zip(self.a_field, snap.a_tau, strict=True)]
        diff_gamma = self.gamma - np.exp(snap.phi_tau)
        calc = self.calc
        return {
            "A-A_tau.Linf": self._sup(np.sqrt(calc.dot(diff_a, diff_a))),
            "divA_tau.Linf": self._sup(snap.div_a_tau),
            "A-A_tau.L2": self._l2(np.sqrt(calc.dot(diff_a, diff_a))),
            "divA_tau.L2": self._l2(snap.div_a_tau),
            "gamma-exp(phi_tau).Linf": self._sup(diff_gamma),
            "grad(gamma-exp(phi_tau)).Linf": self._sup(
                np.sqrt(calc.grad_norm2(diff_gamma))
            ),
            "q_tau.Linf": self._sup(snap.q_tau),
            "q_tau.L2": self._l2(snap.q_tau),
        }

    def targets(self) -> dict[str, float]:
        """Exponents each quantity's slope must not exceed."""
        eta = self.eta
        return {
            "A-A_tau.Linf": 0.0,
            "divA_tau.Linf": 1.0,
            "A-A_tau.L2": -0.5 - eta,
            "divA_tau.L2": 1.0,
            "gamma-exp(phi_tau).Linf": -1.0 - eta,
            "grad(gamma-exp(phi_tau)).Linf": -eta,
            "q_tau.Linf": 1.0,
            "q_tau.L2": 0.5 - eta,
        }

    def _sup(self, field: Any) -> float:
        return float(np.max(np.abs(field[self.region]), initial=0.0))

    def _l2(self, field: Any) -> float:
        weights = self.calc.volume_weights * self.region
        return float(np.sqrt(np.sum(weights * np.abs(field) ** 2)))


# =============================================================================
# PUBLIC API
# =============================================================================


def mollify(
    calc: DiagonalCalculus,
    gamma: Any,
    eta: float,
    tau: float,
    exponent: float = MOLLIFIER_EXPONENT,
) -> MollifiedSnapshot:
    """Snapshot of the mollified family of ``gamma`` at ``tau``.

    Raises:
        DomainError: If ``gamma`` is not positive.
    """
    log_stage(logger, "mollify", tau=tau, eta=eta, exponent=exponent)
    return MollifiedFamily(calc, gamma, eta, exponent).snapshot(tau)


def family_rate_reports(
    family: MollifiedFamily,
    taus: Sequence[float],
    slack: float = RATE_SLACK,
) -> list[RateReport]:
    """Fit every family quantity along a tau ladder.

    Raises:
        ConfigError: If the ladder is not geometric with at least five points.
    """
    ladder = check_ladder(taus)
    log_stage(logger, "family_rate_reports", taus=ladder)
    rows = [family.norms(t) for t in ladder]
    targets = family.targets()
    return [
        rate_report(name, ladder, [row[name] for row in rows], targets[name], slack)
        for name in QUANTITIES
    ]


def bump_conductivity(
    grid: BoxGrid,
    center: Sequence[float],
    width: float,
    amplitude: float = 0.5,
) -> FloatArray:
    """``1 + amplitude * exp(1 - 1 / (1 - |x - c|^2 / w^2))`` (C-infinity)."""
    s2 = _distance(grid, center) ** 2 / width**2
    inside = s2 < 1.0
    bump = np.exp(1.0 - 1.0 / (1.0 - np.where(inside, s2, 0.0)))
    return 1.0 + amplitude * np.where(inside, bump, 0.0)


def cusp_conductivity(
    grid: BoxGrid,
    center: Sequence[float],
    support: float,
    exponent: float = CUSP_EXPONENT,
    amplitude: float = 0.5,
) -> FloatArray:
    """``1 + amplitude * |x - c|^p * chi`` with a smooth cutoff ``chi``.

    The cutoff is one up to half the support radius and zero beyond it.
    """
    d = _distance(grid, center)
    chi = smooth_cutoff(d - 0.5 * support, 0.5 * support)
    return 1.0 + amplitude * d**exponent * chi


# =============================================================================
# PRIVATE HELPERS
# =============================================================================


def _distance(grid: BoxGrid, center: Sequence[float]) -> FloatArray:
    mesh = grid.mesh()
    if len(center) != len(mesh):
        msg = f"Center has {len(center)} coordinates for a {len(mesh)}D grid"
        raise ValueError(msg)
    return np.sqrt(sum((m - c) ** 2 for m, c in zip(mesh, center, strict=True)))

