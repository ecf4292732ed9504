"""Attenuated geodesic ray transform, inversion and the polar pairing."""

from __future__ import annotations

from .grid import FieldGrid
from .pairing import (
    AngularProfile,
    PairingResult,
    fan_beam,
    fourier_x1_pairing_check,
    pairing_test,
)
from .scan import (
    Bump,
    ScanReport,
    attenuation_scan,
    bump_family,
    reconstruct,
    relative_error,
)
from .solvers import CGResult, conjugate_gradient
from .transform import (
    Footprints,
    NormalOperator,
    RayTransform,
    check_attenuation,
    invert_normal,
    normal_apply,
)

__all__ = [
    "AngularProfile",
    "Bump",
    "CGResult",
    "FieldGrid",
    "Footprints",
    "NormalOperator",
    "PairingResult",
    "RayTransform",
    "ScanReport",
    "attenuation_scan",
    "bump_family",
    "check_attenuation",
    "conjugate_gradient",
    "fan_beam",
    "fourier_x1_pairing_check",
    "invert_normal",
    "normal_apply",
    "pairing_test",
    "reconstruct",
    "relative_error",
]
