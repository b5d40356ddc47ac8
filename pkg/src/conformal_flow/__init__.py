"""
conformal-flow: Conformal maps onto the unit disk and ball built from gradient flows
of Green's functions.

The package solves the Green's function of a star-shaped domain, follows the
trajectories of its normalized gradient flow from the pole to the boundary,
and assembles the Riemann map (2D) or the weak-conformal map (3D) from the
exit directions and level values of those trajectories. Diagnostics classify
maps by their metric tensors and scan Green's functions for critical points.

Example:
    >>> from conformal_flow import DomainSpec, solve, map_point
    >>> field = solve(DomainSpec.circle(), [0.0, 0.0])
    >>> result = map_point(field, [0.3, 0.4])
    >>> bool(abs(result.image[0] - 0.3) < 1e-6)
    True
"""

__version__ = "1.0.0"

from .analysis import (
    Classification,
    classify,
    conformal_residual,
    critical_point_scan,
    dilatation,
    lemma1_equivalence_suite,
    lemma2_equivalence_suite,
    lemma3_check,
    lemma3_suite,
    metric_report,
    numeric_jacobian,
    weak_conformal_residual,
)
from .config import CheckSettings, FlowSettings, GridSettings, RunConfig, SolverSettings
from .constants import Backend, DomainKind, ExitCode, MapClass
from .exceptions import (
    ArgumentError,
    ConfigurationError,
    ConformalFlowError,
    ConvergenceError,
    CriticalPointError,
    DegeneracyError,
    DomainError,
    FiniteLengthError,
    LevelRangeError,
    ParametrizationError,
    SingularityError,
    SpecFormatError,
    StiffnessError,
    TraceError,
)
from .flow import (
    direction_constancy_check,
    flux_through_patch,
    shoot_from_pole,
    trace_forward,
    trace_to_level,
    trace_to_pole,
    weighted_length,
)
from .geometry import DomainSpec
from .green import GreenField, solve
from .interfaces import BaseField
from .mapping import injectivity_audit, inverse_map, map_grid, map_point
from .models import (
    BoundaryNode,
    ConePatch,
    FlowTrace,
    InjectivityReport,
    Lemma3Report,
    MapResult,
    MetricReport,
    ScanReport,
    SuiteReport,
)

__all__ = [
    "BaseField",
    "DomainSpec",
    "GreenField",
    "solve",
    "trace_forward",
    "trace_to_level",
    "trace_to_pole",
    "shoot_from_pole",
    "direction_constancy_check",
    "flux_through_patch",
    "weighted_length",
    "map_point",
    "map_grid",
    "inverse_map",
    "injectivity_audit",
    "numeric_jacobian",
    "conformal_residual",
    "weak_conformal_residual",
    "dilatation",
    "classify",
    "Classification",
    "metric_report",
    "lemma3_check",
    "lemma1_equivalence_suite",
    "lemma2_equivalence_suite",
    "lemma3_suite",
    "critical_point_scan",
    "SolverSettings",
    "FlowSettings",
    "GridSettings",
    "CheckSettings",
    "RunConfig",
    "DomainKind",
    "Backend",
    "MapClass",
    "ExitCode",
    "BoundaryNode",
    "FlowTrace",
    "ConePatch",
    "MapResult",
    "MetricReport",
    "Lemma3Report",
    "ScanReport",
    "InjectivityReport",
    "SuiteReport",
    "ConformalFlowError",
    "ConfigurationError",
    "SpecFormatError",
    "DomainError",
    "SingularityError",
    "ParametrizationError",
    "ConvergenceError",
    "TraceError",
    "CriticalPointError",
    "StiffnessError",
    "FiniteLengthError",
    "LevelRangeError",
    "ArgumentError",
    "DegeneracyError",
]
