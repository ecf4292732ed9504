"""Metric charts, geodesic flow, polar normal coordinates and simplicity."""

from __future__ import annotations

from .charts import (
    AdmissibleCylinder,
    ConformalDisc,
    metric_inner,
    metric_norm2,
    normalize,
    orthonormal_frame,
    outward_normal,
)
from .geodesics import (
    BatchTrace,
    GeodesicTrace,
    PhaseState,
    RayNodes,
    christoffel,
    geodesic_trace,
    integrate_geodesic,
    ray_nodes,
    rk4_step,
    step_order,
    time_reversal_check,
    trace_batch,
    unit_speed_drift,
)
from .polar import (
    PolarCoordinates,
    exp_map,
    gauss_lemma_defect,
    polar_coords,
    polar_metric_det,
)
from .simplicity import SimplicityReport, second_fundamental_form, simplicity_check

__all__ = [
    "AdmissibleCylinder",
    "BatchTrace",
    "ConformalDisc",
    "GeodesicTrace",
    "PhaseState",
    "PolarCoordinates",
    "RayNodes",
    "SimplicityReport",
    "christoffel",
    "exp_map",
    "gauss_lemma_defect",
    "geodesic_trace",
    "integrate_geodesic",
    "metric_inner",
    "metric_norm2",
    "normalize",
    "orthonormal_frame",
    "outward_normal",
    "polar_coords",
    "polar_metric_det",
    "ray_nodes",
    "rk4_step",
    "second_fundamental_form",
    "simplicity_check",
    "step_order",
    "time_reversal_check",
    "trace_batch",
    "unit_speed_drift",
]
