"""
Green's functions of star-shaped domains.

G(x, y) = Phi(x - y) + h(x, y) with the fundamental solution
Phi(d) = (1/2pi) ln(1/|d|) in 2D and 1/(4pi|d|) in 3D. The singular part is
pinned exactly; only the harmonic regular part h is represented, either in
closed form (disk, ball) or by the method of fundamental solutions (MFS):
h(x) = sum_j q_j Phi(x - s_j) + q_0 with sources s_j on a dilated copy of the
boundary, fitted so that h = -Phi(. - y) on the boundary.

Example:
    >>> field = solve(DomainSpec.circle(), [0.0, 0.0])
    >>> round(field.value([0.5, 0.0]), 7)
    0.1103178
"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .config import SolverSettings
from .constants import POLE_COLLAR_FACTOR, Backend, DomainKind
from .exceptions import ConfigurationError, ConvergenceError, DomainError, SingularityError
from .geometry import DomainSpec
from .interfaces import BaseField

logger = logging.getLogger(__name__)

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def fundamental(dim: int, d: np.ndarray) -> np.ndarray:
    """Fundamental solution of -Laplace at displacement(s) d of shape (..., dim)."""
    r = np.linalg.norm(d, axis=-1)
    if dim == 2:
        return -np.log(r) / (2 * np.pi)
    return 1.0 / (4 * np.pi * r)


def fundamental_gradient(dim: int, d: np.ndarray) -> np.ndarray:
    """Gradient of fundamental() with respect to the field point."""
    r2 = np.sum(d * d, axis=-1)[..., None]
    if dim == 2:
        return -d / (2 * np.pi * r2)
    return -d / (4 * np.pi * r2**1.5)


def kernel_matrix(dim: int, targets: np.ndarray, sources: np.ndarray) -> np.ndarray:
    """MFS system matrix: one column per source plus a trailing constant column."""
    k = fundamental(dim, targets[:, None, :] - sources[None, :, :])
    return np.hstack([k, np.ones((targets.shape[0], 1))])


def tsvd_solve(a: np.ndarray, b: np.ndarray, cutoff: float) -> Tuple[np.ndarray, int]:
    """
    Least-squares solution by truncated SVD.

    Singular values below ``cutoff * s_max`` are discarded.

    Returns:
        (solution, rank kept)
    """
    u, s, vt = linalg.svd(a, full_matrices=False)
    keep = s > cutoff * s[0]
    coef = vt[keep].T @ ((u[:, keep].T @ b) / s[keep])
    return coef, int(np.count_nonzero(keep))


def fibonacci_directions(n: int) -> np.ndarray:
    """Near-uniform unit vectors on the sphere (golden-angle spiral)."""
    i = np.arange(n)
    mu = 1.0 - (2 * i + 1) / n
    rho = np.sqrt(1.0 - mu**2)
    phi = i * _GOLDEN_ANGLE
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), mu], axis=-1)


@dataclass(frozen=True, eq=False)
class GreenField(BaseField):
    """
    Evaluatable Green's function G(., y) of a domain with pole y.

    Attributes:
        spec: Domain
        pole: The fixed point y
        backend: Representation of the regular part
        sources: MFS source points (outside the closed domain)
        charges: MFS charge strengths, one per source
        constant: MFS constant term of the regular part
        boundary_residual: Max |G| on fresh boundary test points after the fit
        collocation: Collocation count used by the fit
        tolerance: Solver tolerance the field was accepted under

    Example:
        >>> field = solve(DomainSpec.sphere(), [0.0, 0.0, 0.0])
        >>> round(field.regular_part_at_pole(), 7)
        -0.0795775
    """

    spec: DomainSpec
    pole: np.ndarray
    backend: Backend
    sources: Optional[np.ndarray] = None
    charges: Optional[np.ndarray] = None
    constant: float = 0.0
    boundary_residual: float = 0.0
    collocation: Optional[int] = None
    tolerance: float = 0.0

    def __post_init__(self):
        pole = np.array(self.pole, dtype=float).reshape(-1)
        pole.setflags(write=False)
        object.__setattr__(self, "pole", pole)
        object.__setattr__(self, "backend", Backend(self.backend))

    @property
    def dim(self) -> int:  # type: ignore[override]
        return self.spec.dim

    @property
    def diameter(self) -> float:  # type: ignore[override]
        return self.spec.diameter

    @property
    def pole_collar(self) -> float:
        return POLE_COLLAR_FACTOR * self.diameter

    def contains(self, x) -> bool:
        return self.spec.contains(x)

    # ------------------------------------------------------------------
    # Unchecked vectorized evaluation
    # ------------------------------------------------------------------

    def regular_part_array(self, xs: np.ndarray) -> np.ndarray:
        """h(x, y) for an array of points of shape (n, dim); no domain checks."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if self.backend == Backend.ANALYTIC_DISK:
            radius = self.spec.radius
            z = (xs[:, 0] - self.spec.center[0]) + 1j * (xs[:, 1] - self.spec.center[1])
            w = complex(*(self.pole - self.spec.center))
            return np.log(np.abs(radius**2 - np.conj(w) * z) / radius) / (2 * np.pi)
        if self.backend == Backend.ANALYTIC_BALL:
            radius = self.spec.radius
            xr = xs - self.spec.center
            yr = self.pole - self.spec.center
            d = radius**4 - 2 * radius**2 * (xr @ yr) + np.sum(xr * xr, axis=1) * (yr @ yr)
            return -radius / (4 * np.pi * np.sqrt(d))
        k = fundamental(self.dim, xs[:, None, :] - self.sources[None, :, :])
        return k @ self.charges + self.constant

    def regular_gradient_array(self, xs: np.ndarray) -> np.ndarray:
        """grad_x h(x, y) for an array of points; no domain checks."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if self.backend == Backend.ANALYTIC_DISK:
            radius = self.spec.radius
            z = (xs[:, 0] - self.spec.center[0]) + 1j * (xs[:, 1] - self.spec.center[1])
            w = complex(*(self.pole - self.spec.center))
            deriv = -np.conj(w) / (radius**2 - np.conj(w) * z) / (2 * np.pi)
            return np.stack([deriv.real, -deriv.imag], axis=-1)
        if self.backend == Backend.ANALYTIC_BALL:
            radius = self.spec.radius
            xr = xs - self.spec.center
            yr = self.pole - self.spec.center
            yy = yr @ yr
            d = radius**4 - 2 * radius**2 * (xr @ yr) + np.sum(xr * xr, axis=1) * yy
            grad_d = -2 * radius**2 * yr[None, :] + 2 * yy * xr
            return (radius / (8 * np.pi)) * grad_d / d[:, None] ** 1.5
        g = fundamental_gradient(self.dim, xs[:, None, :] - self.sources[None, :, :])
        return np.einsum("nsd,s->nd", g, self.charges)

    def evaluate(self, xs: np.ndarray) -> np.ndarray:
        """G at an array of points; no domain checks (used on boundary nodes)."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return fundamental(self.dim, xs - self.pole) + self.regular_part_array(xs)

    def evaluate_gradient(self, xs: np.ndarray) -> np.ndarray:
        """grad G at an array of points; no domain checks."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return fundamental_gradient(self.dim, xs - self.pole) + self.regular_gradient_array(xs)

    # ------------------------------------------------------------------
    # Checked pointwise evaluation
    # ------------------------------------------------------------------

    def _checked(self, x, allow_pole: bool = False) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape != (self.dim,):
            raise DomainError(f"expected a {self.dim}D point, got shape {x.shape}")
        if not self.spec.contains(x):
            raise DomainError(f"point {x.tolist()} is not interior to the domain")
        if not allow_pole and np.linalg.norm(x - self.pole) <= self.pole_collar:
            raise SingularityError(f"point {x.tolist()} lies inside the pole collar")
        return x

    def value(self, x) -> float:
        """
        G(x, pole), positive in the interior.

        Raises:
            DomainError: x is exterior (or within the boundary collar)
            SingularityError: x is within 1e-9 diameters of the pole
        """
        return float(self.evaluate(self._checked(x))[0])

    def gradient(self, x) -> np.ndarray:
        """Analytic gradient of G(., pole); same errors as value()."""
        return self.evaluate_gradient(self._checked(x))[0]

    def regular_part(self, x) -> float:
        """h(x, pole) at an interior point; defined at the pole itself."""
        return float(self.regular_part_array(self._checked(x, allow_pole=True))[0])

    def regular_part_at_pole(self) -> float:
        """h(y, y), the constant of the pole asymptotics of flow trajectories."""
        return float(self.regular_part_array(self.pole)[0])

    def in_sublevel(self, x, level: float) -> bool:
        """Membership in Omega_level = {x : G(x, y) > level}."""
        x = np.asarray(x, dtype=float)
        if not self.spec.contains(x):
            return False
        if np.linalg.norm(x - self.pole) <= self.pole_collar:
            return True
        return self.value(x) > level

    # ------------------------------------------------------------------
    # Health checks
    # ------------------------------------------------------------------

    def boundary_residual_at(self, n_test: int) -> float:
        """Max |G| over ``n_test`` boundary points offset from the collocation grid."""
        positions, _, _ = self.spec.boundary_arrays(n_test, enforce_minimum=False, shifted=True)
        return float(np.max(np.abs(self.evaluate(positions))))

    def boundary_flux_total(self, n: Optional[int] = None) -> float:
        """
        Integral of dG/dn over the boundary; equals -1 for a unit pole charge.

        Args:
            n: Quadrature node count; defaults to four times the collocation count
        """
        if n is None:
            n = 4 * (self.collocation or (256 if self.dim == 2 else 1024))
        positions, normals, weights = self.spec.boundary_arrays(n, enforce_minimum=False)
        flux_density = np.sum(self.evaluate_gradient(positions) * normals, axis=1)
        return float(np.sum(weights * flux_density))

    # ------------------------------------------------------------------
    # Persistence
    # ------------------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready representation including the domain and the MFS data."""
        return {
            "backend": self.backend.value,
            "domain": self.spec.to_dict(),
            "pole": self.pole.tolist(),
            "sources": None if self.sources is None else self.sources.tolist(),
            "charges": None if self.charges is None else self.charges.tolist(),
            "constant": float(self.constant),
            "boundary_residual": float(self.boundary_residual),
            "collocation": self.collocation,
            "tolerance": float(self.tolerance),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GreenField":
        """
        Rebuild a field from to_dict() output.

        Raises:
            ConfigurationError: missing keys or inconsistent MFS data
        """
        try:
            spec = DomainSpec.from_dict(data["domain"])
            backend = Backend(data["backend"])
            sources = data.get("sources")
            charges = data.get("charges")
            field = cls(
                spec=spec,
                pole=np.asarray(data["pole"], dtype=float),
                backend=backend,
                sources=None if sources is None else np.asarray(sources, dtype=float),
                charges=None if charges is None else np.asarray(charges, dtype=float),
                constant=float(data.get("constant", 0.0)),
                boundary_residual=float(data.get("boundary_residual", 0.0)),
                collocation=data.get("collocation"),
                tolerance=float(data.get("tolerance", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"invalid field data: {exc}")
        if backend == Backend.MFS:
            if field.sources is None or field.charges is None:
                raise ConfigurationError("mfs field needs sources and charges")
            if field.sources.shape != (field.charges.size, spec.dim):
                raise ConfigurationError("mfs sources and charges disagree in size")
        return field


def _mfs_sources(spec: DomainSpec, count: int, dilation: float) -> np.ndarray:
    if spec.dim == 2:
        theta = 2 * np.pi * (np.arange(count) + 0.5) / count
        return spec.points_at(theta, scale=dilation)
    u = fibonacci_directions(count)
    theta = np.arccos(np.clip(u[:, 2], -1.0, 1.0))
    phi = np.arctan2(u[:, 1], u[:, 0])
    return spec.points_at(theta, phi, scale=dilation)


def _fit_mfs(
    spec: DomainSpec, pole: np.ndarray, n: int, settings: SolverSettings
) -> GreenField:
    colloc, _, _ = spec.boundary_arrays(n)
    sources = _mfs_sources(spec, max(1, colloc.shape[0] // 2), settings.source_dilation)
    a = kernel_matrix(spec.dim, colloc, sources)
    b = -fundamental(spec.dim, colloc - pole)
    coef, rank = tsvd_solve(a, b, settings.svd_cutoff)
    field = GreenField(
        spec=spec,
        pole=pole,
        backend=Backend.MFS,
        sources=sources,
        charges=coef[:-1],
        constant=float(coef[-1]),
        collocation=n,
        tolerance=settings.tolerance,
    )
    residual = field.boundary_residual_at(4 * n)
    logger.debug(
        "MFS fit: %d collocation nodes, %d sources, rank %d, boundary residual %.3e",
        colloc.shape[0], sources.shape[0], rank, residual,
    )
    return dataclasses.replace(field, boundary_residual=residual)


def choose_backend(spec: DomainSpec, settings: SolverSettings) -> Backend:
    """Analytic backends for exact circles / spheres unless a backend is forced."""
    if settings.backend is not None:
        forced = Backend(settings.backend)
        if forced == Backend.ANALYTIC_DISK and spec.kind != DomainKind.CIRCLE:
            raise ConfigurationError("analytic-disk backend requires a circle domain")
        if forced == Backend.ANALYTIC_BALL and spec.kind != DomainKind.SPHERE:
            raise ConfigurationError("analytic-ball backend requires a sphere domain")
        return forced
    if spec.kind == DomainKind.CIRCLE:
        return Backend.ANALYTIC_DISK
    if spec.kind == DomainKind.SPHERE:
        return Backend.ANALYTIC_BALL
    return Backend.MFS


def solve(
    spec: DomainSpec, pole: Sequence[float], settings: Optional[SolverSettings] = None
) -> GreenField:
    """
    Construct the Green's function of ``spec`` with the given pole.

    The MFS backend starts at the configured collocation count and doubles it
    until the boundary residual meets the tolerance or ``max_collocation`` is
    exceeded.

    Raises:
        DomainError: the pole is not interior
        ConvergenceError: the boundary residual stays above tolerance
    """
    settings = settings or SolverSettings()
    pole = np.asarray(pole, dtype=float).reshape(-1)
    if pole.shape != (spec.dim,):
        raise DomainError(f"pole must have {spec.dim} coordinates, got {pole.size}")
    if not spec.contains(pole) or spec.clearance(pole) <= POLE_COLLAR_FACTOR * spec.diameter:
        raise DomainError(f"pole {pole.tolist()} is not interior to the domain")

    backend = choose_backend(spec, settings)
    if backend != Backend.MFS:
        field = GreenField(spec=spec, pole=pole, backend=backend, tolerance=settings.tolerance)
        logger.info("Using %s backend for pole %s", backend.value, pole.tolist())
        return field

    n = settings.collocation_for(spec.dim)
    limit = settings.max_collocation_for(spec.dim)
    while True:
        field = _fit_mfs(spec, pole, n, settings)
        if field.boundary_residual <= settings.tolerance:
            logger.info(
                "MFS converged with %d collocation nodes, residual %.3e",
                n, field.boundary_residual,
            )
            return field
        if 2 * n > limit:
            raise ConvergenceError(
                f"MFS boundary residual {field.boundary_residual:.3e} exceeds tolerance "
                f"{settings.tolerance:.3e} at {n} collocation nodes",
                residual=field.boundary_residual,
            )
        logger.warning(
            "MFS residual %.3e above tolerance with %d nodes; retrying with %d",
            field.boundary_residual, n, 2 * n,
        )
        n *= 2
