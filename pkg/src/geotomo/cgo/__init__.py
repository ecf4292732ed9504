"""Complex geometrical optics solutions on the extended cylinder."""

from __future__ import annotations

from .conjugation import (
    ConjugatedOperator,
    ConjugationDefect,
    conjugate,
    first_conjugation_defect,
    second_conjugation_defect,
)
from .cylinder import ExtendedCylinder, TransversalBasis, smooth_cutoff
from .mollify import (
    CUSP_BASE_EXPONENT,
    QUANTITIES,
    MollifiedFamily,
    MollifiedSnapshot,
    bump_conductivity,
    cusp_conductivity,
    family_rate_reports,
    mollify,
)
from .perturbed import PerturbedInverse, perturbed_inverse_g
from .shifted import (
    ShiftedInverse,
    g0_norm_ladder,
    shifted_inverse_g0,
    solve_with_retry,
)
from .solution import (
    CGOParams,
    CGOSolution,
    build_cgo,
    cgo_rate_reports,
    weak_residual,
)

__all__ = [
    "CUSP_BASE_EXPONENT",
    "QUANTITIES",
    "CGOParams",
    "CGOSolution",
    "ConjugatedOperator",
    "ConjugationDefect",
    "ExtendedCylinder",
    "MollifiedFamily",
    "MollifiedSnapshot",
    "PerturbedInverse",
    "ShiftedInverse",
    "TransversalBasis",
    "build_cgo",
    "bump_conductivity",
    "cgo_rate_reports",
    "conjugate",
    "cusp_conductivity",
    "family_rate_reports",
    "first_conjugation_defect",
    "g0_norm_ladder",
    "mollify",
    "perturbed_inverse_g",
    "second_conjugation_defect",
    "shifted_inverse_g0",
    "smooth_cutoff",
    "solve_with_retry",
    "weak_residual",
]
