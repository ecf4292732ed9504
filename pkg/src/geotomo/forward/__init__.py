"""Conductivity equation on box charts, DN maps and the uniqueness identities."""

from __future__ import annotations

from .chart import BoundaryNodes, BoxChart
from .dn_map import DNMap, dn_map, normal_flux, partial_data_residual
from .identities import (
    AlessandriniReport,
    ConformalReport,
    LogQuotientReport,
    alessandrini_check,
    alessandrini_refinement,
    conformal_reduction_check,
    log_quotient_pde_residual,
)
from .logpolar import LogPolarMap, LogPolarReport, PointDomain, logpolar_map
from .probes import (
    PROBE_QUANTITIES,
    CGOPair,
    ProbeBox,
    ProbeResult,
    boundary_term_probe,
    matched_pair,
    probe_cylinder,
    probe_profile,
)
from .solver import (
    ConductivityField,
    DirichletSolver,
    assemble_stiffness,
    smooth_bump,
    solve_dirichlet,
)

__all__ = [
    "PROBE_QUANTITIES",
    "AlessandriniReport",
    "BoundaryNodes",
    "BoxChart",
    "CGOPair",
    "ConductivityField",
    "ConformalReport",
    "DNMap",
    "DirichletSolver",
    "LogPolarMap",
    "LogPolarReport",
    "LogQuotientReport",
    "PointDomain",
    "ProbeBox",
    "ProbeResult",
    "alessandrini_check",
    "alessandrini_refinement",
    "assemble_stiffness",
    "boundary_term_probe",
    "conformal_reduction_check",
    "dn_map",
    "log_quotient_pde_residual",
    "logpolar_map",
    "matched_pair",
    "normal_flux",
    "partial_data_residual",
    "probe_cylinder",
    "probe_profile",
    "smooth_bump",
    "solve_dirichlet",
]
