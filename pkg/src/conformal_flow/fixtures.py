"""
Reference maps and fields for the diagnostics.

- The inversion x -> x / |x|^2, a conformal map with a closed-form Jacobian.
- Random harmonic polynomials in 2D and 3D for the gradient bound suite.
- The Green's function of the annulus 1 < |x| < 2, a doubly connected domain
  whose Green's function has a critical point.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.stats import special_ortho_group

from .constants import BOUNDARY_COLLAR, DEFAULT_SVD_CUTOFF, POLE_COLLAR_FACTOR
from .exceptions import ConvergenceError, DomainError, SingularityError
from .green import fundamental, fundamental_gradient, kernel_matrix, tsvd_solve
from .interfaces import BaseField

logger = logging.getLogger(__name__)


def inversion_map(x: Sequence[float]) -> np.ndarray:
    """x / |x|^2."""
    x = np.asarray(x, dtype=float)
    return x / float(x @ x)


def inversion_jacobian(x: Sequence[float]) -> np.ndarray:
    """
    Closed-form Jacobian (|x|^2 I - 2 x x^T) / |x|^4 of the inversion.

    Example:
        >>> np.round(inversion_jacobian([1.0, 1.0, 1.0]) * 9, 12)
        array([[ 1., -2., -2.],
               [-2.,  1., -2.],
               [-2., -2.,  1.]])
    """
    x = np.asarray(x, dtype=float)
    r2 = float(x @ x)
    return (r2 * np.eye(x.size) - 2 * np.outer(x, x)) / r2**2


def inversion_metric(x: Sequence[float]) -> np.ndarray:
    """J^T J of the inversion, I / |x|^4."""
    x = np.asarray(x, dtype=float)
    return np.eye(x.size) / float(x @ x) ** 2


@dataclass(frozen=True)
class HarmonicPolynomial:
    """
    Sum of c_k Re((a_k . x)^n_k) + d_k Im((a_k . x)^n_k) with isotropic a_k (a_k . a_k = 0).

    Every term is harmonic in any dimension. Called with an (n, dim) array it
    returns n values.
    """

    vectors: np.ndarray
    degrees: Tuple[int, ...]
    real_coeffs: np.ndarray
    imag_coeffs: np.ndarray
    offset: float = 0.0

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        z = x @ self.vectors.T
        powers = z ** np.asarray(self.degrees)
        return self.offset + powers.real @ self.real_coeffs + powers.imag @ self.imag_coeffs

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def harmonic_polynomial(
    rng: np.random.Generator, dim: int, max_degree: int = 5, terms: int = 3
) -> HarmonicPolynomial:
    """Random harmonic polynomial of degree <= max_degree."""
    vectors = []
    for _ in range(terms):
        frame = special_ortho_group.rvs(dim, random_state=rng)
        vectors.append(frame[0] + 1j * frame[1])
    return HarmonicPolynomial(
        vectors=np.array(vectors),
        degrees=tuple(int(d) for d in rng.integers(1, max_degree + 1, size=terms)),
        real_coeffs=rng.normal(size=terms),
        imag_coeffs=rng.normal(size=terms),
        offset=float(rng.normal()),
    )


class AnnulusField(BaseField):
    """
    Green's function of the annulus inner < |x| < outer with an interior pole.

    The regular part is fitted by fundamental solutions on two source rings,
    one inside the hole and one outside the outer circle. The annulus is not
    simply connected, so the gradient of its Green's function vanishes somewhere.

    Example:
        >>> field = AnnulusField()
        >>> field.boundary_residual < 1e-8
        True
    """

    dim = 2

    def __init__(
        self,
        inner: float = 1.0,
        outer: float = 2.0,
        pole: Sequence[float] = (1.5, 0.0),
        collocation: int = 256,
    ):
        self.inner = inner
        self.outer = outer
        self.pole = np.asarray(pole, dtype=float)
        self.diameter = 2 * outer
        if not self.contains(self.pole):
            raise DomainError(f"pole {self.pole.tolist()} is not inside the annulus")
        theta = 2 * np.pi * np.arange(collocation) / collocation
        ring = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        colloc = np.vstack([inner * ring, outer * ring])
        half = 2 * np.pi * (np.arange(collocation // 2) + 0.5) / (collocation // 2)
        source_ring = np.stack([np.cos(half), np.sin(half)], axis=-1)
        self.sources = np.vstack([0.6 * inner * source_ring, 1.5 * outer * source_ring])
        a = kernel_matrix(2, colloc, self.sources)
        b = -fundamental(2, colloc - self.pole)
        coef, _ = tsvd_solve(a, b, DEFAULT_SVD_CUTOFF)
        self.charges = coef[:-1]
        self.constant = float(coef[-1])
        test = 2 * np.pi * (np.arange(4 * collocation) + 0.5) / (4 * collocation)
        test_ring = np.stack([np.cos(test), np.sin(test)], axis=-1)
        self.boundary_residual = float(
            np.max(np.abs(self.evaluate(np.vstack([inner * test_ring, outer * test_ring]))))
        )
        if not self.boundary_residual < 1e-6:
            raise ConvergenceError(
                f"annulus fit residual {self.boundary_residual:.3e}", self.boundary_residual
            )
        logger.debug("Annulus field fitted, boundary residual %.3e", self.boundary_residual)

    def evaluate(self, xs: np.ndarray) -> np.ndarray:
        xs = np.atleast_2d(xs)
        k = fundamental(2, xs[:, None, :] - self.sources[None, :, :])
        return fundamental(2, xs - self.pole) + k @ self.charges + self.constant

    def evaluate_gradient(self, xs: np.ndarray) -> np.ndarray:
        xs = np.atleast_2d(xs)
        g = fundamental_gradient(2, xs[:, None, :] - self.sources[None, :, :])
        return fundamental_gradient(2, xs - self.pole) + np.einsum("nsd,s->nd", g, self.charges)

    def contains(self, x) -> bool:
        rho = float(np.linalg.norm(np.asarray(x, dtype=float)))
        return self.inner + BOUNDARY_COLLAR < rho < self.outer - BOUNDARY_COLLAR

    def _checked(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.contains(x):
            raise DomainError(f"point {x.tolist()} is not inside the annulus")
        if np.linalg.norm(x - self.pole) <= POLE_COLLAR_FACTOR * self.diameter:
            raise SingularityError(f"point {x.tolist()} lies inside the pole collar")
        return x

    def value(self, x) -> float:
        return float(self.evaluate(self._checked(x))[0])

    def gradient(self, x) -> np.ndarray:
        return self.evaluate_gradient(self._checked(x))[0]

    def regular_part_at_pole(self) -> float:
        k = fundamental(2, self.pole[None, :] - self.sources)
        return float(k @ self.charges + self.constant)

    def grid(
        self, radial: int = 16, angular: int = 64, margin: Optional[float] = None
    ) -> np.ndarray:
        """Polar grid strictly inside the annulus."""
        margin = 0.01 * (self.outer - self.inner) if margin is None else margin
        radii = np.linspace(self.inner + margin, self.outer - margin, radial)
        theta = 2 * np.pi * np.arange(angular) / angular
        ring = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return (radii[:, None, None] * ring[None, :, :]).reshape(-1, 2)


def annulus_saddle_radius(field: AnnulusField) -> float:
    """
    Radius of the critical point on the ray opposite the pole.

    By symmetry the gradient is radial on that ray; G vanishes at both circles,
    so its radial derivative changes sign in between.
    """
    direction = -field.pole / np.linalg.norm(field.pole)

    def radial_derivative(rho: float) -> float:
        return float(field.gradient(rho * direction) @ direction)

    return float(brentq(radial_derivative, field.inner + 1e-6, field.outer - 1e-6, xtol=1e-14))
