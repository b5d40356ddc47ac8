"""
Shared data models for conformal-flow.

This module provides the result records exchanged between the geometry,
flow, mapping and analysis layers. Every record supports attribute access,
dict-style access and ``to_dict()`` conversion to JSON-ready builtins.
"""

from dataclasses import dataclass, field, fields
from typing import Any, Dict, List, Optional, Tuple

import numpy as np


def to_builtin(value: Any) -> Any:
    """
    Convert numpy containers and scalars (recursively) to plain Python values.

    Example:
        >>> to_builtin({"x": np.array([1.0, 2.0])})
        {'x': [1.0, 2.0]}
    """
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {k: to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    if hasattr(value, "value") and hasattr(value, "name"):
        return value.value
    return value


class RecordMixin:
    """
    Dict-style access shared by all result records.

    Supports multiple access patterns:
    - Dict-style: report['dilatation']
    - Attribute-style: report.dilatation
    - Dict conversion: report.to_dict()
    """

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert to a dictionary of JSON-ready builtins.

        Nested records are converted recursively and numpy arrays become lists.
        """
        out: Dict[str, Any] = {}
        for f in fields(self):  # type: ignore[arg-type]
            value = getattr(self, f.name)
            if isinstance(value, RecordMixin):
                out[f.name] = value.to_dict()
            else:
                out[f.name] = to_builtin(value)
        return out

    def get(self, key: str, default: Any = None) -> Any:
        """Dict-style get method."""
        return getattr(self, key, default)

    def __getitem__(self, key: str) -> Any:
        try:
            return getattr(self, key)
        except AttributeError:
            raise KeyError(f"'{key}' not found in {type(self).__name__}")

    def __contains__(self, key: str) -> bool:
        return hasattr(self, key)

    def keys(self):
        """Return field names like a dict."""
        return self.__dataclass_fields__.keys()  # type: ignore[attr-defined]


@dataclass(frozen=True)
class BoundaryNode(RecordMixin):
    """
    A boundary quadrature node.

    Attributes:
        position: Point on the boundary
        outward_normal: Unit outer normal at ``position``
        weight: Quadrature weight for the arc-length / surface-area measure

    Example:
        >>> node = BoundaryNode(np.array([1.0, 0.0]), np.array([1.0, 0.0]), np.pi / 2)
        >>> node['weight']
        1.5707963267948966
    """

    position: np.ndarray
    outward_normal: np.ndarray
    weight: float


@dataclass(frozen=True)
class TraceStats(RecordMixin):
    """Per-trace bookkeeping attached to a map result."""

    steps: int = 0
    invariant_residual: float = 0.0
    truncated: bool = False


@dataclass
class FlowTrace(RecordMixin):
    """
    A solution curve of the gradient-flow system.

    Attributes:
        dim: 2 or 3
        t: Flow parameters of the accepted samples, strictly increasing
        x: Sample positions, one row per entry of ``t``
        level_residual: |G(x) - target_level(t)| at every sample
        direction: Unit exit direction at the pole, once extracted
        weighted_length: Integral of sqrt(4 pi |grad G|) ds accumulated along the samples (3D)
        lengths: Cumulative weighted length at every sample (3D)
        truncated: True when a 3D trace was cut at ``truncation_level`` before the boundary
        truncation_level: Value of G at which a truncated trace stopped
        tail: Estimated weighted length between the last sample and the boundary
        steps: Number of accepted integrator steps

    Example:
        >>> trace = FlowTrace(dim=2, t=np.array([0.5]), x=np.array([[0.5, 0.0]]))
        >>> trace.samples
        [(0.5, array([0.5, 0. ]))]
    """

    dim: int
    t: np.ndarray
    x: np.ndarray
    level_residual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    direction: Optional[np.ndarray] = None
    weighted_length: float = 0.0
    lengths: np.ndarray = field(default_factory=lambda: np.zeros(0))
    truncated: bool = False
    truncation_level: Optional[float] = None
    tail: float = 0.0
    steps: int = 0

    @property
    def samples(self) -> List[Tuple[float, np.ndarray]]:
        """Ordered (t, x) pairs."""
        return [(float(t), x) for t, x in zip(self.t, self.x)]

    @property
    def start(self) -> np.ndarray:
        return self.x[0]

    @property
    def end(self) -> np.ndarray:
        return self.x[-1]

    @property
    def max_level_residual(self) -> float:
        if self.level_residual.size == 0:
            return 0.0
        return float(np.max(self.level_residual))


@dataclass(frozen=True)
class ConePatch(RecordMixin):
    """
    A patch of a level set selected by exit directions inside a cone.

    Attributes:
        axis: Unit bisector of the cone
        angle: Plane angle in (0, 2 pi] (2D) or solid angle in (0, 4 pi] (3D)
        level: Flow parameter t of the level set G = target_level(t)
    """

    axis: np.ndarray
    angle: float
    level: float


@dataclass
class MapResult(RecordMixin):
    """
    Image of one source point under the constructed map.

    Attributes:
        source: Point of the domain
        image: Point of the unit disk / ball (NaN when ``error`` is set)
        local_scale: Estimated |phi'| at the source
        stats: Trace statistics of the trajectory used
        error: Failure message when the point could not be mapped
    """

    source: np.ndarray
    image: np.ndarray
    local_scale: float
    stats: TraceStats = field(default_factory=TraceStats)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class MetricReport(RecordMixin):
    """
    Differential diagnostics of a map at one point.

    Attributes:
        point: Where the map was differentiated
        J: Jacobi matrix
        C: Metric tensor J^T J
        eigenvalues: Eigenvalues of C, descending, clamped at zero
        trace: tr(C)
        determinant: det(C)
        frobenius_sq: |C|^2
        conformal_residual: Normalized equal-eigenvalue residual
        weak_conformal_residual: Normalized geometric-progression residual
        progression_residual: |l1 l3 - l2^2| / l2^2 on sorted eigenvalues
        dilatation: sqrt(lmax / lmin)
        map_class: Classification at the configured tolerance
    """

    point: np.ndarray
    J: np.ndarray
    C: np.ndarray
    eigenvalues: np.ndarray
    trace: float
    determinant: float
    frobenius_sq: float
    conformal_residual: float
    weak_conformal_residual: float
    progression_residual: float
    dilatation: float
    map_class: str = ""


@dataclass(frozen=True)
class Lemma3Report(RecordMixin):
    """Both sides of the harmonic gradient bound at the boundary minimizer."""

    lhs: float
    rhs: float
    margin: float
    minimizer: np.ndarray
    passed: bool


@dataclass(frozen=True)
class ScanReport(RecordMixin):
    """Minimum gradient magnitude found by a critical-point scan."""

    min_grad: float
    argmin: np.ndarray
    grid_size: int


@dataclass
class InjectivityReport(RecordMixin):
    """
    Pairwise separation audit of mapped images.

    Attributes:
        min_ratio: Minimum of |image_i - image_j| / |source_i - source_j|
        flags: Index pairs with distinct sources and (near) coincident images
        pairs_checked: Number of pairs compared
    """

    min_ratio: float
    flags: List[Tuple[int, int]] = field(default_factory=list)
    pairs_checked: int = 0

    @property
    def passed(self) -> bool:
        return not self.flags


@dataclass
class SuiteReport(RecordMixin):
    """
    Outcome of a randomized property suite.

    Attributes:
        name: Suite identifier
        trials: Number of random cases evaluated
        failures: Number of cases violating the property
        worst: Worst observed value of the suite's figure of merit
    """

    name: str
    trials: int
    failures: int = 0
    worst: float = 0.0

    @property
    def passed(self) -> bool:
        return self.failures == 0
