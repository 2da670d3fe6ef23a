"""Finsler spacetime toolkit.

Lagrangians on cone domains, their fundamental and Cartan tensors, the
Chern connection with a fixed reference field, curvature and the
pp-wave criterion, focal-point scans, the lightlike quotient, and
plane-wave limits, plus a JSON-driven verification CLI.
"""

from .connection import VectorField, christoffel, geodesic, gradient
from .curvature import chern_curvature, ppwave_condition
from .errors import (
    ChartError,
    ConeError,
    ConfigError,
    ConstructionError,
    EvaluationError,
    FinslerError,
    NoGradientError,
    SignatureError,
    SolverError,
)
from .lagrangian import (
    Lagrangian,
    QuadraticLagrangian,
    RandersNorm,
    build_brinkmann_quadratic,
    build_minkowski,
    build_parallel_example,
    build_ppwave_example,
    catalog,
    from_descriptor,
)
from .penrose import (
    BrinkmannProfile,
    RosenProfile,
    brinkmann_roundtrip,
    penrose_limit,
    plane_wave_lagrangian,
    rosen_to_brinkmann,
)
from .ppwave import delta_scan, lightlike_form_check, parallel_criterion
from .quotient import holonomy_defect, quotient_metric
from .tensors import cartan_tensor, fundamental_tensor, homogeneity_report

__version__ = "0.1.0"

__all__ = [
    "BrinkmannProfile",
    "ChartError",
    "ConeError",
    "ConfigError",
    "ConstructionError",
    "EvaluationError",
    "FinslerError",
    "Lagrangian",
    "NoGradientError",
    "QuadraticLagrangian",
    "RandersNorm",
    "RosenProfile",
    "SignatureError",
    "SolverError",
    "VectorField",
    "brinkmann_roundtrip",
    "build_brinkmann_quadratic",
    "build_minkowski",
    "build_parallel_example",
    "build_ppwave_example",
    "cartan_tensor",
    "catalog",
    "chern_curvature",
    "christoffel",
    "delta_scan",
    "from_descriptor",
    "fundamental_tensor",
    "geodesic",
    "gradient",
    "holonomy_defect",
    "homogeneity_report",
    "lightlike_form_check",
    "parallel_criterion",
    "penrose_limit",
    "plane_wave_lagrangian",
    "ppwave_condition",
    "quotient_metric",
    "rosen_to_brinkmann",
    "__version__",
]
