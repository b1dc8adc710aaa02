"""Conformal invariants of immersed submanifolds: contraction algebra, frame engine and energies."""

from .conformal import (
    I_operator,
    InvarianceReport,
    MetricChart,
    MobiusMap,
    apply_mobius,
    curvature_transform_residual,
    h_transform_residual,
    invariance_sweep,
)
from .energies import (
    EnergyReport,
    EnergySpec,
    energy,
    energy_F,
    energy_P4,
    energy_Pab,
    estimate_C,
    euler_from_K,
    gauss_degree,
    newton_expansion_residuals,
    normal_euler_from_Kperp,
    pfaffian4,
    quartic_traceless_residual,
    sphere_area,
    willmore,
)
from .expressions import parse_expression
from .geometry import AmbientMetric, Immersion, Interval, PointFrame, frame_at, intrinsic_curvature_direct
from .jets import Jet
from .quadrature import QuadratureGrid, build_grid, integrate
from .surfaces import clifford_torus, ellipsoid, graph, load_surface, sphere, torus
from .tensor_algebra import (
    ContractionSum,
    ContractionTerm,
    FactorKind,
    canonical_form,
    enumerate_terms,
    evaluate_term,
    parse_sum,
    parse_term,
    sums_equal_numeric,
    weight,
)

__all__ = [
    "AmbientMetric",
    "ContractionSum",
    "ContractionTerm",
    "EnergyReport",
    "EnergySpec",
    "FactorKind",
    "I_operator",
    "Immersion",
    "Interval",
    "InvarianceReport",
    "Jet",
    "MetricChart",
    "MobiusMap",
    "PointFrame",
    "QuadratureGrid",
    "apply_mobius",
    "build_grid",
    "canonical_form",
    "clifford_torus",
    "curvature_transform_residual",
    "ellipsoid",
    "energy",
    "energy_F",
    "energy_P4",
    "energy_Pab",
    "enumerate_terms",
    "estimate_C",
    "euler_from_K",
    "evaluate_term",
    "frame_at",
    "gauss_degree",
    "graph",
    "h_transform_residual",
    "integrate",
    "intrinsic_curvature_direct",
    "invariance_sweep",
    "load_surface",
    "newton_expansion_residuals",
    "normal_euler_from_Kperp",
    "parse_expression",
    "parse_sum",
    "parse_term",
    "pfaffian4",
    "quartic_traceless_residual",
    "sphere",
    "sphere_area",
    "sums_equal_numeric",
    "torus",
    "weight",
    "willmore",
]

__version__ = "0.1.0"
