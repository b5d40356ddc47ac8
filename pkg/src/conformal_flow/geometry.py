"""
Domain representations for conformal-flow.

Every supported domain is star-shaped with respect to its center and is
stored as a radial graph: r(theta) over the circle in 2D, r(theta, phi) over
the sphere in 3D (theta is the polar angle, phi the azimuth). That keeps
membership tests, normals and quadrature weights in closed form.

Example:
    >>> spec = DomainSpec.circle(1.0)
    >>> spec.boundary_point(np.pi / 2)
    array([6.123234e-17, 1.000000e+00])
    >>> spec.contains([0.5, 0.0])
    True
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy.special import lpmv

from .constants import (
    BOUNDARY_COLLAR,
    MIN_NODES_2D,
    MIN_NODES_3D,
    DomainKind,
)
from .exceptions import ConfigurationError, ParametrizationError
from .models import BoundaryNode

logger = logging.getLogger(__name__)

Param = Union[float, Sequence[float]]

_SHAPE_KEYS = {
    DomainKind.CIRCLE: {"radius"},
    DomainKind.SPHERE: {"radius"},
    DomainKind.ELLIPSE: {"semi_axes"},
    DomainKind.ELLIPSOID: {"semi_axes"},
    DomainKind.FOURIER_CURVE: {"base_radius", "cos_coeffs", "sin_coeffs"},
    DomainKind.SPHERICAL_HARMONIC_SURFACE: {"base_radius", "harmonics"},
}


def _sh_norm(l: int, m: int) -> float:
    m = abs(m)
    norm = math.sqrt((2 * l + 1) / (4 * math.pi) * math.factorial(l - m) / math.factorial(l + m))
    return norm if m == 0 else math.sqrt(2.0) * norm


def _legendre_and_dtheta(l: int, m: int, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """P_l^m(cos theta) and its theta-derivative, Condon-Shortley phase as in lpmv."""
    x = np.cos(theta)
    p = lpmv(m, l, x)
    if m == 0:
        dp = lpmv(1, l, x)
    else:
        dp = 0.5 * (lpmv(m + 1, l, x) - (l + m) * (l - m + 1) * lpmv(m - 1, l, x))
    return p, dp


@dataclass(frozen=True, eq=False)
class DomainSpec:
    """
    Parametric description of a simply connected 2D or 3D domain.

    Use the named constructors rather than the raw initializer.

    Attributes:
        kind: Shape family
        center: Star center; every ray from it meets the boundary once
        radius: Radius (circle, sphere) or base radius (Fourier / harmonic series)
        semi_axes: Ellipse / ellipsoid semi-axes along the coordinate axes
        cos_coeffs: Fourier cosine coefficients for k = 1, 2, ...
        sin_coeffs: Fourier sine coefficients for k = 1, 2, ...
        harmonics: (l, m, amplitude) triples of real spherical harmonics

    Example:
        >>> blob = DomainSpec.fourier_curve(1.0, cos_coeffs=[0.0, 0.1], sin_coeffs=[0.0, 0.0])
        >>> blob.dim
        2
    """

    kind: DomainKind
    center: np.ndarray
    radius: float = 1.0
    semi_axes: Tuple[float, ...] = ()
    cos_coeffs: Tuple[float, ...] = ()
    sin_coeffs: Tuple[float, ...] = ()
    harmonics: Tuple[Tuple[int, int, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind(self.kind))
        center = np.asarray(self.center, dtype=float).reshape(-1)
        if center.shape != (self.kind.dim,):
            raise ConfigurationError(
                f"{self.kind.value} needs a center with {self.kind.dim} coordinates, "
                f"got {center.size}"
            )
        if not np.all(np.isfinite(center)):
            raise ConfigurationError("center must be finite")
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        self._validate_shape()
        r_min = float(np.min(self._dense_radii()))
        if not r_min > 0.0:
            raise ConfigurationError(
                f"radial function of {self.kind.value} is not positive (min {r_min:.3g}); "
                "the domain is not star-shaped about its center"
            )

    # ------------------------------------------------------------------
    # Named constructors
    # ------------------------------------------------------------------

    @classmethod
    def circle(cls, radius: float = 1.0, center: Sequence[float] = (0.0, 0.0)) -> "DomainSpec":
        return cls(DomainKind.CIRCLE, np.asarray(center), radius=float(radius))

    @classmethod
    def ellipse(
        cls, a: float, b: float, center: Sequence[float] = (0.0, 0.0)
    ) -> "DomainSpec":
        return cls(DomainKind.ELLIPSE, np.asarray(center), semi_axes=(float(a), float(b)))

    @classmethod
    def fourier_curve(
        cls,
        base_radius: float,
        cos_coeffs: Sequence[float] = (),
        sin_coeffs: Sequence[float] = (),
        center: Sequence[float] = (0.0, 0.0),
    ) -> "DomainSpec":
        """Radius base_radius + sum_k (a_k cos k theta + b_k sin k theta), k >= 1."""
        return cls(
            DomainKind.FOURIER_CURVE,
            np.asarray(center),
            radius=float(base_radius),
            cos_coeffs=tuple(float(c) for c in cos_coeffs),
            sin_coeffs=tuple(float(s) for s in sin_coeffs),
        )

    @classmethod
    def sphere(cls, radius: float = 1.0, center: Sequence[float] = (0.0, 0.0, 0.0)) -> "DomainSpec":
        return cls(DomainKind.SPHERE, np.asarray(center), radius=float(radius))

    @classmethod
    def ellipsoid(
        cls, a: float, b: float, c: float, center: Sequence[float] = (0.0, 0.0, 0.0)
    ) -> "DomainSpec":
        return cls(
            DomainKind.ELLIPSOID, np.asarray(center), semi_axes=(float(a), float(b), float(c))
        )

    @classmethod
    def spherical_harmonic_surface(
        cls,
        base_radius: float,
        harmonics: Sequence[Sequence[float]] = (),
        center: Sequence[float] = (0.0, 0.0, 0.0),
    ) -> "DomainSpec":
        """Radius base_radius + sum amplitude * Y_lm(theta, phi) over real harmonics."""
        terms = tuple((int(l), int(m), float(a)) for l, m, a in harmonics)
        return cls(
            DomainKind.SPHERICAL_HARMONIC_SURFACE,
            np.asarray(center),
            radius=float(base_radius),
            harmonics=terms,
        )

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        """
        JSON-ready representation, the inverse of from_dict().

        Example:
            >>> DomainSpec.sphere().to_dict()
            {'dim': 3, 'kind': 'sphere', 'center': [0.0, 0.0, 0.0], 'radius': 1.0}
        """
        out: Dict[str, Any] = {
            "dim": self.dim,
            "kind": self.kind.value,
            "center": self.center.tolist(),
        }
        if self.kind in (DomainKind.CIRCLE, DomainKind.SPHERE):
            out["radius"] = self.radius
        elif self.kind in (DomainKind.ELLIPSE, DomainKind.ELLIPSOID):
            out["semi_axes"] = list(self.semi_axes)
        elif self.kind == DomainKind.FOURIER_CURVE:
            out["base_radius"] = self.radius
            out["cos_coeffs"] = list(self.cos_coeffs)
            out["sin_coeffs"] = list(self.sin_coeffs)
        else:
            out["base_radius"] = self.radius
            out["harmonics"] = [[l, m, a] for l, m, a in self.harmonics]
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DomainSpec":
        """
        Build a spec from its JSON encoding.

        Raises:
            ConfigurationError: unknown kind or fields, missing fields, or
                a dimension that disagrees with the kind / center
        """
        if not isinstance(data, dict):
            raise ConfigurationError("domain spec must be a JSON object")
        try:
            kind = DomainKind(data.get("kind"))
        except ValueError:
            raise ConfigurationError(f"unknown domain kind: {data.get('kind')!r}")
        allowed = {"dim", "kind", "center"} | _SHAPE_KEYS[kind]
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ConfigurationError(f"unknown fields for {kind.value}: {', '.join(unknown)}")
        dim = data.get("dim", kind.dim)
        if dim != kind.dim:
            raise ConfigurationError(f"{kind.value} is a {kind.dim}D kind, but dim={dim}")
        center = data.get("center", [0.0] * kind.dim)
        if len(center) != dim:
            raise ConfigurationError(f"center has {len(center)} coordinates but dim={dim}")
        required = {"semi_axes"} if "semi_axes" in _SHAPE_KEYS[kind] else set()
        if kind in (DomainKind.FOURIER_CURVE, DomainKind.SPHERICAL_HARMONIC_SURFACE):
            required = {"base_radius"}
        missing = sorted(required - set(data))
        if missing:
            raise ConfigurationError(f"missing fields for {kind.value}: {', '.join(missing)}")

        if kind == DomainKind.CIRCLE:
            return cls.circle(data.get("radius", 1.0), center)
        if kind == DomainKind.SPHERE:
            return cls.sphere(data.get("radius", 1.0), center)
        if kind in (DomainKind.ELLIPSE, DomainKind.ELLIPSOID):
            axes = data["semi_axes"]
            if len(axes) != dim:
                raise ConfigurationError(f"semi_axes has {len(axes)} entries but dim={dim}")
            if kind == DomainKind.ELLIPSE:
                return cls.ellipse(axes[0], axes[1], center)
            return cls.ellipsoid(axes[0], axes[1], axes[2], center)
        if kind == DomainKind.FOURIER_CURVE:
            return cls.fourier_curve(
                data["base_radius"],
                data.get("cos_coeffs", []),
                data.get("sin_coeffs", []),
                center,
            )
        harmonics = data.get("harmonics", [])
        for term in harmonics:
            if len(term) != 3 or abs(int(term[1])) > int(term[0]) or int(term[0]) < 0:
                raise ConfigurationError(f"invalid harmonic term {term!r}; expected [l, m, amp]")
        return cls.spherical_harmonic_surface(data["base_radius"], harmonics, center)

    # ------------------------------------------------------------------
    # Radial function
    # ------------------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.kind.dim

    def _validate_shape(self) -> None:
        if self.kind in (DomainKind.ELLIPSE, DomainKind.ELLIPSOID):
            if len(self.semi_axes) != self.dim or min(self.semi_axes) <= 0:
                raise ConfigurationError(
                    f"{self.kind.value} needs {self.dim} positive semi-axes, got {self.semi_axes}"
                )
        elif self.radius <= 0:
            raise ConfigurationError(f"radius must be positive, got {self.radius}")
        if self.kind == DomainKind.SPHERICAL_HARMONIC_SURFACE:
            for l, m, _ in self.harmonics:
                if l < 0 or abs(m) > l:
                    raise ConfigurationError(f"invalid harmonic degree/order ({l}, {m})")

    def _radial_2d(self, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """r(theta) and dr/dtheta."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == DomainKind.CIRCLE:
            return np.full_like(theta, self.radius), np.zeros_like(theta)
        if self.kind == DomainKind.ELLIPSE:
            a, b = self.semi_axes
            c, s = np.cos(theta), np.sin(theta)
            d = (b * c) ** 2 + (a * s) ** 2
            r = a * b / np.sqrt(d)
            dr = -a * b * (a * a - b * b) * s * c / d**1.5
            return r, dr
        r = np.full_like(theta, self.radius)
        dr = np.zeros_like(theta)
        for k, coeff in enumerate(self.cos_coeffs, start=1):
            r = r + coeff * np.cos(k * theta)
            dr = dr - k * coeff * np.sin(k * theta)
        for k, coeff in enumerate(self.sin_coeffs, start=1):
            r = r + coeff * np.sin(k * theta)
            dr = dr + k * coeff * np.cos(k * theta)
        return r, dr

    def _radial_3d(
        self, theta: np.ndarray, phi: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """r(theta, phi), dr/dtheta and dr/dphi."""
        theta, phi = np.broadcast_arrays(
            np.asarray(theta, dtype=float), np.asarray(phi, dtype=float)
        )
        if self.kind == DomainKind.SPHERE:
            return np.full(theta.shape, self.radius), np.zeros(theta.shape), np.zeros(theta.shape)
        st, ct = np.sin(theta), np.cos(theta)
        sp, cp = np.sin(phi), np.cos(phi)
        if self.kind == DomainKind.ELLIPSOID:
            a, b, c = self.semi_axes
            planar = (cp / a) ** 2 + (sp / b) ** 2
            d = st**2 * planar + (ct / c) ** 2
            d_theta = 2.0 * st * ct * (planar - 1.0 / c**2)
            d_phi = st**2 * 2.0 * sp * cp * (1.0 / b**2 - 1.0 / a**2)
            r = d**-0.5
            return r, -0.5 * d**-1.5 * d_theta, -0.5 * d**-1.5 * d_phi
        r = np.full(theta.shape, self.radius)
        r_theta = np.zeros(theta.shape)
        r_phi = np.zeros(theta.shape)
        for l, m, amp in self.harmonics:
            p, dp = _legendre_and_dtheta(l, abs(m), theta)
            norm = _sh_norm(l, m)
            if m > 0:
                ang, dang = np.cos(m * phi), -m * np.sin(m * phi)
            elif m < 0:
                ang, dang = np.sin(-m * phi), -m * np.cos(-m * phi)
            else:
                ang, dang = np.ones(theta.shape), np.zeros(theta.shape)
            r = r + amp * norm * p * ang
            r_theta = r_theta + amp * norm * dp * ang
            r_phi = r_phi + amp * norm * p * dang
        return r, r_theta, r_phi

    def _dense_radii(self) -> np.ndarray:
        if self.dim == 2:
            return self._radial_2d(np.linspace(0.0, 2 * np.pi, 2048, endpoint=False))[0]
        theta, phi = np.meshgrid(
            np.linspace(0.0, np.pi, 65), np.linspace(0.0, 2 * np.pi, 128, endpoint=False)
        )
        return self._radial_3d(theta, phi)[0]

    def radius_at(self, param: Param) -> float:
        """Radial function at a boundary parameter."""
        if self.dim == 2:
            return float(self._radial_2d(np.asarray(float(param)))[0])
        theta, phi = self._split(param)
        return float(self._radial_3d(theta, phi)[0])

    @cached_property
    def diameter(self) -> float:
        """Length scale 2 max r, an upper bound of the true diameter."""
        return 2.0 * float(np.max(self._dense_radii()))

    # ------------------------------------------------------------------
    # Boundary geometry
    # ------------------------------------------------------------------

    def _split(self, param: Param) -> Tuple[float, float]:
        try:
            theta, phi = (float(v) for v in param)  # type: ignore[union-attr]
        except (TypeError, ValueError):
            raise ConfigurationError(f"3D boundary parameter must be (theta, phi), got {param!r}")
        return theta, phi

    def _points_2d(self, theta: np.ndarray) -> np.ndarray:
        r, _ = self._radial_2d(theta)
        return self.center + np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)

    def _tangents_2d(self, theta: np.ndarray) -> np.ndarray:
        r, dr = self._radial_2d(theta)
        c, s = np.cos(theta), np.sin(theta)
        return np.stack([dr * c - r * s, dr * s + r * c], axis=-1)

    def _normals_2d(self, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Unit outer normals and parametric speed |dX/dtheta|."""
        tangents = self._tangents_2d(theta)
        tx, ty = tangents[..., 0], tangents[..., 1]
        speed = np.hypot(tx, ty)
        if np.any(speed <= 1e-300):
            raise ParametrizationError(f"zero boundary speed for {self.kind.value}")
        return np.stack([ty, -tx], axis=-1) / speed[..., None], speed

    def _points_3d(self, theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
        r, _, _ = self._radial_3d(theta, phi)
        u = np.stack(
            [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1
        )
        return self.center + r[..., None] * u

    def _normals_3d(self, theta: np.ndarray, phi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Unit outer normals and the area density r^2 |m| per d(cos theta) d(phi).

        m = u - (r_theta / r) e_theta - (r_phi / (r sin theta)) e_phi is the gradient of
        rho - r(theta, phi); the polar singularity of the last term is evaluated just off
        the pole.
        """
        theta, phi = np.broadcast_arrays(
            np.asarray(theta, dtype=float), np.asarray(phi, dtype=float)
        )
        r, r_theta, _ = self._radial_3d(theta, phi)
        theta_off = np.where(np.abs(np.sin(theta)) < 1e-7, theta + 1e-7, theta)
        r_off, _, r_phi_off = self._radial_3d(theta_off, phi)
        azimuthal = r_phi_off / (r_off * np.sin(theta_off))
        st, ct = np.sin(theta), np.cos(theta)
        sp, cp = np.sin(phi), np.cos(phi)
        u = np.stack([st * cp, st * sp, ct], axis=-1)
        e_theta = np.stack([ct * cp, ct * sp, -st], axis=-1)
        e_phi = np.stack([-sp, cp, np.zeros_like(sp)], axis=-1)
        m = u - (r_theta / r)[..., None] * e_theta - azimuthal[..., None] * e_phi
        norm = np.linalg.norm(m, axis=-1)
        if np.any(norm <= 1e-300):
            raise ParametrizationError(f"degenerate tangent plane for {self.kind.value}")
        return m / norm[..., None], r**2 * norm

    def boundary_point(self, param: Param) -> np.ndarray:
        """
        Boundary point at a parameter: theta in 2D, (theta, phi) in 3D.

        Parameters wrap modulo their period.

        Example:
            >>> DomainSpec.ellipse(2.0, 1.0).boundary_point(0.0)
            array([2., 0.])
        """
        if self.dim == 2:
            return self._points_2d(np.asarray(float(param)))
        theta, phi = self._split(param)
        return self._points_3d(np.asarray(theta), np.asarray(phi))

    def points_at(self, theta, phi=None, scale: float = 1.0) -> np.ndarray:
        """
        Vectorized boundary points, optionally radially scaled about the center.

        ``scale`` > 1 yields points of the dilated copy of the boundary.
        """
        theta = np.asarray(theta, dtype=float)
        if self.dim == 2:
            pts = self._points_2d(theta)
        else:
            pts = self._points_3d(*np.broadcast_arrays(theta, np.asarray(phi, dtype=float)))
        return self.center + scale * (pts - self.center)

    def outward_normal(self, param: Param) -> np.ndarray:
        """
        Unit outer normal at a parameter.

        Raises:
            ParametrizationError: the parametrization has zero speed there
        """
        if self.dim == 2:
            return self._normals_2d(np.asarray(float(param)))[0]
        theta, phi = self._split(param)
        return self._normals_3d(np.asarray(theta), np.asarray(phi))[0]

    def tangent(self, param: Param) -> np.ndarray:
        """
        Parametric tangent vectors at a parameter.

        2D: the unit tangent, counterclockwise. 3D: the rows dX/dtheta and dX/dphi,
        unnormalized; dX/dphi vanishes at the poles theta = 0, pi.

        Example:
            >>> DomainSpec.circle().tangent(0.0)
            array([0., 1.])
        """
        if self.dim == 2:
            tangent = self._tangents_2d(np.asarray(float(param)))
            speed = float(np.hypot(*tangent))
            if speed <= 1e-300:
                raise ParametrizationError(f"zero boundary speed for {self.kind.value}")
            return tangent / speed
        theta, phi = self._split(param)
        radial = self._radial_3d(np.asarray(theta), np.asarray(phi))
        r, r_theta, r_phi = (float(v) for v in radial)
        st, ct = math.sin(theta), math.cos(theta)
        sp, cp = math.sin(phi), math.cos(phi)
        u = np.array([st * cp, st * sp, ct])
        e_theta = np.array([ct * cp, ct * sp, -st])
        e_phi = np.array([-sp, cp, 0.0])
        return np.stack([r_theta * u + r * e_theta, r_phi * u + r * st * e_phi])

    def polar_coordinates(self, p) -> Tuple[float, ...]:
        """(rho, theta) or (rho, theta, phi) of a point relative to the center."""
        d = np.asarray(p, dtype=float) - self.center
        rho = float(np.linalg.norm(d))
        if self.dim == 2:
            return rho, math.atan2(d[1], d[0])
        theta = math.acos(max(-1.0, min(1.0, d[2] / rho))) if rho > 0 else 0.0
        return rho, theta, math.atan2(d[1], d[0])

    def contains(self, p) -> bool:
        """
        True iff p is strictly interior.

        Points closer than 1e-12 (radially) to the boundary count as exterior.

        Example:
            >>> DomainSpec.sphere().contains([0.0, 0.0, 0.999999999999])
            False
        """
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,) or not np.all(np.isfinite(p)):
            return False
        coords = self.polar_coordinates(p)
        rho = coords[0]
        if rho == 0.0:
            return True
        r = self.radius_at(coords[1] if self.dim == 2 else coords[1:])
        return bool(rho < r - BOUNDARY_COLLAR)

    def clearance(self, p) -> float:
        """Radial gap r(direction) - rho; positive inside."""
        coords = self.polar_coordinates(p)
        if coords[0] == 0.0:
            return self.radius_at(0.0 if self.dim == 2 else (0.0, 0.0))
        r = self.radius_at(coords[1] if self.dim == 2 else coords[1:])
        return r - coords[0]

    def sample_boundary(self, n: int, enforce_minimum: bool = True) -> List[BoundaryNode]:
        """
        Boundary quadrature nodes.

        2D: n nodes uniform in theta with trapezoid weights (2 pi / n) |dX/dtheta|.
        3D: a latitude-longitude product grid with Gauss-Legendre nodes in cos(theta);
        n_theta = ceil(sqrt(n / 2)) and n_phi = 2 n_theta, so at least n nodes.

        Raises:
            ConfigurationError: n below 16 (2D) or 64 (3D) while enforce_minimum is set
        """
        positions, normals, weights = self.boundary_arrays(n, enforce_minimum)
        return [BoundaryNode(p, nv, float(w)) for p, nv, w in zip(positions, normals, weights)]

    def boundary_arrays(
        self, n: int, enforce_minimum: bool = True, shifted: bool = False
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Array form of sample_boundary(): positions, normals and weights.

        ``shifted`` offsets the nodes by half a grid cell (fresh test points).
        """
        minimum = MIN_NODES_2D if self.dim == 2 else MIN_NODES_3D
        if enforce_minimum and n < minimum:
            raise ConfigurationError(
                f"need at least {minimum} boundary nodes in {self.dim}D, got {n}"
            )
        if n < 1:
            raise ConfigurationError(f"node count must be positive, got {n}")
        if self.dim == 2:
            theta = 2 * np.pi * (np.arange(n) + (0.5 if shifted else 0.0)) / n
            normals, speed = self._normals_2d(theta)
            return self._points_2d(theta), normals, (2 * np.pi / n) * speed
        n_theta = max(1, math.ceil(math.sqrt(n / 2.0)))
        if shifted:
            n_theta += 1
        n_phi = 2 * n_theta
        mu, w_mu = np.polynomial.legendre.leggauss(n_theta)
        phi_offset = 0.5 if shifted else 0.0
        phi = 2 * np.pi * (np.arange(n_phi) + phi_offset) / n_phi
        theta_grid, phi_grid = np.meshgrid(np.arccos(mu), phi, indexing="ij")
        weight_grid = np.outer(w_mu, np.full(n_phi, 2 * np.pi / n_phi))
        theta_flat, phi_flat = theta_grid.ravel(), phi_grid.ravel()
        normals, density = self._normals_3d(theta_flat, phi_flat)
        positions = self._points_3d(theta_flat, phi_flat)
        return positions, normals, weight_grid.ravel() * density
