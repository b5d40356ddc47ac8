"""
Configuration objects for conformal-flow.

Settings are plain dataclasses validated on construction. RunConfig bundles
everything the command line front-end needs and is loaded from a JSON file;
unknown keys are rejected so that typos surface as configuration errors.

Example:
    >>> settings = SolverSettings(collocation=128, tolerance=1e-9)
    >>> settings.collocation_for(2)
    128
"""

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from .constants import (
    DEFAULT_ATOL,
    DEFAULT_COLLOCATION_2D,
    DEFAULT_COLLOCATION_3D,
    DEFAULT_EPS_BDRY,
    DEFAULT_EPS_TRUNC,
    DEFAULT_MAX_STEPS,
    DEFAULT_RTOL,
    DEFAULT_SEED,
    DEFAULT_SOLVER_TOLERANCE,
    DEFAULT_SOURCE_DILATION,
    DEFAULT_SVD_CUTOFF,
    DEFAULT_T_CUT_FACTOR,
    Backend,
)
from .exceptions import ConfigurationError, SpecFormatError

logger = logging.getLogger(__name__)


def _require_positive(owner: object, *names: str) -> None:
    for name in names:
        value = getattr(owner, name)
        if value is not None and not value > 0:
            raise ConfigurationError(f"{type(owner).__name__}.{name} must be positive, got {value}")


def _from_mapping(cls, data: Optional[Dict[str, Any]]):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigurationError(f"{cls.__name__} section must be a JSON object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown {cls.__name__} keys: {', '.join(unknown)}")
    return cls(**data)


@dataclass(frozen=True)
class SolverSettings:
    """
    Green's function solver settings.

    Attributes:
        collocation: Boundary collocation count; defaults to 256 (2D) / 1152 (3D)
        source_dilation: Radial dilation of the boundary carrying the MFS sources
        tolerance: Max |G| allowed on fresh boundary test points
        svd_cutoff: Relative singular-value cutoff of the truncated SVD
        max_collocation: Largest collocation count tried before giving up
        backend: Force a backend instead of choosing one from the domain kind
    """

    collocation: Optional[int] = None
    source_dilation: float = DEFAULT_SOURCE_DILATION
    tolerance: float = DEFAULT_SOLVER_TOLERANCE
    svd_cutoff: float = DEFAULT_SVD_CUTOFF
    max_collocation: Optional[int] = None
    backend: Optional[Backend] = None

    def __post_init__(self):
        _require_positive(self, "collocation", "tolerance", "svd_cutoff", "max_collocation")
        if not self.source_dilation > 1.0:
            raise ConfigurationError(
                f"source_dilation must exceed 1 to keep sources outside, got {self.source_dilation}"
            )
        if self.backend is not None:
            try:
                object.__setattr__(self, "backend", Backend(self.backend))
            except ValueError:
                raise ConfigurationError(f"unknown backend {self.backend!r}")

    def collocation_for(self, dim: int) -> int:
        if self.collocation is not None:
            return int(self.collocation)
        return DEFAULT_COLLOCATION_2D if dim == 2 else DEFAULT_COLLOCATION_3D

    def max_collocation_for(self, dim: int) -> int:
        if self.max_collocation is not None:
            return int(self.max_collocation)
        return 4 * self.collocation_for(dim)


@dataclass(frozen=True)
class FlowSettings:
    """
    Flow integration settings.

    Attributes:
        rtol: Relative tolerance of the embedded Runge-Kutta pair
        atol: Absolute tolerance of the embedded Runge-Kutta pair
        eps_bdry: 2D traces stop at t = 1 - eps_bdry
        eps_trunc: 3D traces stop once G <= eps_trunc
        t_cut_factor: Direction extraction level t_cut = t_cut_factor * diameter
        max_steps: Step budget per trace
    """

    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    eps_bdry: float = DEFAULT_EPS_BDRY
    eps_trunc: float = DEFAULT_EPS_TRUNC
    t_cut_factor: float = DEFAULT_T_CUT_FACTOR
    max_steps: int = DEFAULT_MAX_STEPS

    def __post_init__(self):
        _require_positive(
            self, "rtol", "atol", "eps_bdry", "eps_trunc", "t_cut_factor", "max_steps"
        )
        if self.eps_bdry >= 1.0:
            raise ConfigurationError("eps_bdry must be below 1")


@dataclass(frozen=True)
class GridSettings:
    """
    Evaluation grid settings.

    Attributes:
        radial: Number of radii of polar / spherical grids (0 gives an empty grid)
        angular: Number of azimuths
        polar: Number of polar angles of 3D spherical grids
        pole_exclusion: Radius around the pole excluded from scans and checks
        boundary_clearance: Minimum radial gap to the boundary for grid points
        max_radius_fraction: Largest grid radius as a fraction of the boundary radius
    """

    radial: int = 16
    angular: int = 16
    polar: int = 8
    pole_exclusion: float = 0.05
    boundary_clearance: float = 0.05
    max_radius_fraction: float = 0.99

    def __post_init__(self):
        _require_positive(self, "angular", "polar", "pole_exclusion")
        if self.radial < 0:
            raise ConfigurationError(f"radial must be nonnegative, got {self.radial}")
        if not 0.0 < self.max_radius_fraction < 1.0:
            raise ConfigurationError("max_radius_fraction must lie in (0, 1)")
        if self.boundary_clearance < 0:
            raise ConfigurationError("boundary_clearance must be nonnegative")


@dataclass(frozen=True)
class CheckSettings:
    """
    Tolerances of the check pipeline.

    Attributes:
        residual_tol: Classification tolerance of the conformality residuals
        class_fraction: Fraction of grid points that must reach the expected class
        min_gradient: Critical-point scan threshold for simply connected domains
        lemma3_trials: Number of random harmonic polynomials in the gradient bound suite
        lemma3_samples: Boundary samples per gradient bound check
        metric_points: Maximum number of grid points differentiated for metric reports
    """

    residual_tol: float = 1e-3
    class_fraction: float = 0.99
    min_gradient: float = 1e-3
    lemma3_trials: int = 1000
    lemma3_samples: int = 720
    metric_points: int = 64

    def __post_init__(self):
        _require_positive(
            self,
            "residual_tol",
            "class_fraction",
            "min_gradient",
            "lemma3_trials",
            "lemma3_samples",
            "metric_points",
        )


@dataclass
class RunConfig:
    """
    Everything one CLI run needs.

    Attributes:
        domain: Inline domain spec dictionary or a path to a domain JSON file
        pole: Pole coordinates
        solver: Green's function solver settings
        flow: Flow integration settings
        grid: Evaluation grid settings
        check: Check pipeline tolerances
        output_dir: Directory receiving artifacts
        field_file: Optional previously solved field to reuse
        jobs: Worker count for grid mapping
        seed: Seed for all randomized samples
        base_dir: Directory used to resolve relative paths

    Example:
        >>> cfg = RunConfig.from_dict({"domain": {"dim": 2, "kind": "circle"}, "pole": [0, 0]})
        >>> cfg.jobs
        1
    """

    domain: Union[Dict[str, Any], str]
    pole: List[float]
    solver: SolverSettings = field(default_factory=SolverSettings)
    flow: FlowSettings = field(default_factory=FlowSettings)
    grid: GridSettings = field(default_factory=GridSettings)
    check: CheckSettings = field(default_factory=CheckSettings)
    output_dir: str = "out"
    field_file: Optional[str] = None
    jobs: int = 1
    seed: int = DEFAULT_SEED
    base_dir: str = "."

    def __post_init__(self):
        if not isinstance(self.pole, (list, tuple)) or not self.pole:
            raise ConfigurationError("pole must be a list of coordinates")
        self.pole = [float(v) for v in self.pole]
        if self.jobs < 1:
            raise ConfigurationError(f"jobs must be at least 1, got {self.jobs}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any], base_dir: Union[str, Path] = ".") -> "RunConfig":
        """
        Build a config from a parsed JSON object.

        Raises:
            ConfigurationError: unknown keys, missing domain / pole, invalid values
        """
        if not isinstance(data, dict):
            raise ConfigurationError("config must be a JSON object")
        sections = {"solver", "flow", "grid", "check"}
        known = {f.name for f in fields(cls)} - {"base_dir"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
        for required in ("domain", "pole"):
            if required not in data:
                raise ConfigurationError(f"config is missing '{required}'")
        kwargs = {k: v for k, v in data.items() if k not in sections}
        return cls(
            solver=_from_mapping(SolverSettings, data.get("solver")),
            flow=_from_mapping(FlowSettings, data.get("flow")),
            grid=_from_mapping(GridSettings, data.get("grid")),
            check=_from_mapping(CheckSettings, data.get("check")),
            base_dir=str(base_dir),
            **kwargs,
        )

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "RunConfig":
        """
        Load a JSON config file; relative paths inside resolve against its directory.

        Raises:
            SpecFormatError: the file is not valid JSON
            ConfigurationError: the content is invalid
        """
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecFormatError(f"malformed JSON in {path}: {exc.msg}", exc.lineno, exc.colno)
        logger.debug("Loaded config %s", path)
        return cls.from_dict(data, base_dir=path.parent)

    def resolve(self, relative: str) -> Path:
        p = Path(relative)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out.pop("base_dir")
        if self.solver.backend is not None:
            out["solver"]["backend"] = self.solver.backend.value
        return out
