"""
Differential diagnostics of maps and Green's functions.

Metric tensors C = J^T J are classified by their eigenvalues:
    conformal       all eigenvalues equal           27 det C = tr^3 C  (2D: 4 det C = tr^2 C)
    weak-conformal  eigenvalues in geometric progression
                    (tr^2 C - |C|^2)^3 = 8 det C tr^3 C
    quasi-conformal finite dilatation sqrt(lmax / lmin)
All residuals are scale-normalized so the classification is invariant under C -> cC.

The module also checks the harmonic gradient bound at boundary minimizers
and scans Green's functions for critical points.
"""

import logging
import math
from typing import Callable, Iterable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.stats import special_ortho_group

from .constants import (
    DEFAULT_SEED,
    EIGEN_CLAMP,
    JACOBIAN_ABSOLUTE_STEP,
    JACOBIAN_RELATIVE_STEP,
    RESIDUAL_FLOOR,
    SYMMETRY_TOLERANCE,
    MapClass,
)
from .exceptions import ArgumentError, ConformalFlowError, DegeneracyError
from .fixtures import harmonic_polynomial
from .green import fibonacci_directions
from .interfaces import BaseField
from .models import Lemma3Report, MetricReport, ScanReport, SuiteReport

logger = logging.getLogger(__name__)

PointMap = Callable[[np.ndarray], np.ndarray]


class Classification(NamedTuple):
    """Map class and the dilatation K (inf when the metric is degenerate)."""

    map_class: MapClass
    dilatation: float


def _symmetric(c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.shape not in ((2, 2), (3, 3)):
        raise ArgumentError(f"expected a 2x2 or 3x3 matrix, got shape {c.shape}")
    scale = max(1.0, float(np.max(np.abs(c))))
    if np.max(np.abs(c - c.T)) > SYMMETRY_TOLERANCE * scale:
        raise ArgumentError("metric tensor is not symmetric")
    return 0.5 * (c + c.T)


def eigenvalues_sym(c, clamp: bool = True) -> np.ndarray:
    """
    Eigenvalues of a symmetric 2x2 or 3x3 matrix in closed form, descending.

    3x3 matrices use the trigonometric solution of the characteristic cubic.
    With ``clamp`` set, eigenvalues in [-1e-12 scale, 0) are clamped to zero.

    Raises:
        ArgumentError: non-symmetric input, or a clearly negative eigenvalue with clamp

    Example:
        >>> eigenvalues_sym(np.diag([1.0, 16.0, 4.0]))
        array([16.,  4.,  1.])
    """
    c = _symmetric(c)
    if c.shape == (2, 2):
        mean = 0.5 * (c[0, 0] + c[1, 1])
        radius = math.hypot(0.5 * (c[0, 0] - c[1, 1]), c[0, 1])
        eig = np.array([mean + radius, mean - radius])
    else:
        off = c[0, 1] ** 2 + c[0, 2] ** 2 + c[1, 2] ** 2
        q = np.trace(c) / 3.0
        if off == 0.0:
            eig = np.sort(np.diag(c))[::-1].copy()
        else:
            spread = float(np.sum((np.diag(c) - q) ** 2))
            p = math.sqrt((spread + 2 * off) / 6)
            b = (c - q * np.eye(3)) / p
            r = max(-1.0, min(1.0, np.linalg.det(b) / 2))
            phi = math.acos(r) / 3
            e1 = q + 2 * p * math.cos(phi)
            e3 = q + 2 * p * math.cos(phi + 2 * math.pi / 3)
            eig = np.array([e1, 3 * q - e1 - e3, e3])
    if clamp:
        floor = -EIGEN_CLAMP * max(1.0, float(np.max(np.abs(eig))))
        if eig.min() < floor:
            raise ArgumentError(f"metric tensor has a negative eigenvalue {eig.min():.3e}")
        eig = np.maximum(eig, 0.0)
    return eig


def _embedded(c: np.ndarray) -> np.ndarray:
    """2D eigenvalues completed with the geometric mean as a third one."""
    eig = eigenvalues_sym(c)
    if eig.size == 2:
        eig = np.sort(np.append(eig, math.sqrt(eig[0] * eig[1])))[::-1]
    return eig


def conformal_residual(c) -> float:
    """
    |27 det C - tr^3 C| / tr^3 C; the 2D specialization is |4 det C - tr^2 C| / tr^2 C.

    Zero iff all eigenvalues coincide.

    Example:
        >>> conformal_residual(np.diag([1.0, 1.0, 4.0]))
        0.5
    """
    c = _symmetric(c)
    tr = float(np.trace(c))
    det = float(np.linalg.det(c))
    if c.shape == (2, 2):
        return abs(4 * det - tr**2) / max(tr**2, RESIDUAL_FLOOR)
    return abs(27 * det - tr**3) / max(tr**3, RESIDUAL_FLOOR)


def weak_conformal_residual(c) -> float:
    """
    |(tr^2 C - |C|^2)^3 - 8 det C tr^3 C| / tr^6 C.

    Zero iff the eigenvalues form a geometric progression in some order. 2D
    metrics are embedded with the geometric mean of their eigenvalues as a third
    eigenvalue, which always completes a progression.
    """
    c = _symmetric(c)
    if c.shape == (2, 2):
        c = np.diag(_embedded(c))
    tr = float(np.trace(c))
    frob = float(np.sum(c * c))
    det = float(np.linalg.det(c))
    return abs((tr**2 - frob) ** 3 - 8 * det * tr**3) / max(tr**6, RESIDUAL_FLOOR)


def progression_residual(c) -> float:
    """|l1 l3 - l2^2| / l2^2 on descending eigenvalues."""
    eig = _embedded(_symmetric(c))
    return abs(eig[0] * eig[2] - eig[1] ** 2) / max(eig[1] ** 2, RESIDUAL_FLOOR)


def dilatation(c) -> float:
    """
    sqrt(lmax / lmin), the axis ratio of the image ellipsoid of a small ball.

    Raises:
        DegeneracyError: lmin <= 0

    Example:
        >>> dilatation(np.diag([1.0, 4.0, 16.0]))
        4.0
    """
    eig = eigenvalues_sym(c)
    if not eig[-1] > 0.0:
        raise DegeneracyError("metric tensor is singular; dilatation is unbounded")
    return math.sqrt(eig[0] / eig[-1])


def classify(c, tol: float = 1e-3) -> Classification:
    """
    Conformal, weak-conformal, quasi-conformal(K) or general (degenerate metric).

    Example:
        >>> classify(np.diag([1.0, 2.0, 4.0])).map_class.value
        'weak-conformal'
    """
    try:
        k = dilatation(c)
    except DegeneracyError:
        return Classification(MapClass.GENERAL, math.inf)
    if conformal_residual(c) < tol:
        return Classification(MapClass.CONFORMAL, k)
    if weak_conformal_residual(c) < tol:
        return Classification(MapClass.WEAK_CONFORMAL, k)
    return Classification(MapClass.QUASI_CONFORMAL, k)


def numeric_jacobian(f: PointMap, x: Sequence[float], step: Optional[float] = None) -> np.ndarray:
    """
    Central-difference Jacobian of a point map, one column per coordinate.

    The default step is max(1e-5 |x|, 1e-8). A failing evaluation re-raises the map's
    error with the offending point attached as ``offending_point``.

    Example:
        >>> np.round(numeric_jacobian(lambda p: 2 * p, [1.0, 2.0]), 9)
        array([[2., 0.],
               [0., 2.]])
    """
    x = np.asarray(x, dtype=float)
    h = step if step is not None else max(
        JACOBIAN_RELATIVE_STEP * float(np.linalg.norm(x)), JACOBIAN_ABSOLUTE_STEP
    )
    columns = []
    for j in range(x.size):
        e = np.zeros(x.size)
        e[j] = h
        values = []
        for point in (x + e, x - e):
            try:
                values.append(np.asarray(f(point), dtype=float))
            except ConformalFlowError as exc:
                exc.offending_point = tuple(point.tolist())  # type: ignore[attr-defined]
                raise
        columns.append((values[0] - values[1]) / (2 * h))
    return np.stack(columns, axis=1)


def metric_report(
    f: PointMap, x: Sequence[float], tol: float = 1e-3, step: Optional[float] = None
) -> MetricReport:
    """Jacobian, metric tensor, eigenvalues, residuals and class of f at x."""
    x = np.asarray(x, dtype=float)
    jac = numeric_jacobian(f, x, step)
    c = jac.T @ jac
    return metric_report_from_metric(c, point=x, jacobian=jac, tol=tol)


def metric_report_from_metric(
    c: np.ndarray, point: np.ndarray, jacobian: Optional[np.ndarray] = None, tol: float = 1e-3
) -> MetricReport:
    c = _symmetric(c)
    eig = eigenvalues_sym(c)
    label = classify(c, tol)
    return MetricReport(
        point=np.asarray(point, dtype=float),
        J=jacobian if jacobian is not None else np.full(c.shape, np.nan),
        C=c,
        eigenvalues=eig,
        trace=float(np.trace(c)),
        determinant=float(np.linalg.det(c)),
        frobenius_sq=float(np.sum(c * c)),
        conformal_residual=conformal_residual(c),
        weak_conformal_residual=weak_conformal_residual(c),
        progression_residual=progression_residual(c),
        dilatation=label.dilatation,
        map_class=label.map_class.value,
    )


def max_dilatation(reports: Iterable[MetricReport]) -> float:
    """Largest pointwise dilatation over a set of reports (grid evidence only)."""
    values = [r.dilatation for r in reports]
    return max(values) if values else 0.0


def _values(u: Callable, points: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(points)
    return np.broadcast_to(np.asarray(u(points), dtype=float).reshape(-1), (len(points),))


def _gradient(u: Callable, x: np.ndarray, h: float) -> np.ndarray:
    eye = np.eye(x.size) * h
    plus = _values(u, x + eye)
    minus = _values(u, x - eye)
    return (plus - minus) / (2 * h)


def lemma3_check(
    u: Callable, x0: Sequence[float], r: float, n_samples: int = 720
) -> Lemma3Report:
    """
    Gradient bound for a function harmonic on the closed ball B(x0, r).

    At the minimizer x* of u over the ball (on its boundary),
    |grad u(x*)| >= c (u(x0) - u(x*)) with c = 1 / (2r) in 2D and 1 / (4r) in 3D.
    x* is located among n_samples boundary samples and refined by bounded
    minimization; the gradient is taken by central differences.

    Args:
        u: Vectorized function mapping an (n, dim) array to n values

    Example:
        >>> report = lemma3_check(lambda p: p[:, 0], [0.0, 0.0], 1.0)
        >>> round(report.lhs, 6), round(report.rhs, 6)
        (1.0, 0.5)
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    if dim == 2:
        theta = 2 * np.pi * np.arange(n_samples) / n_samples
        samples = x0 + r * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    else:
        samples = x0 + r * fibonacci_directions(n_samples)
    values = _values(u, samples)
    best = int(np.argmin(values))

    if dim == 2:
        width = 2 * np.pi / n_samples

        def on_circle(angle: float) -> np.ndarray:
            return x0 + r * np.array([math.cos(angle), math.sin(angle)])

        res = minimize_scalar(
            lambda a: float(_values(u, on_circle(a))[0]),
            bounds=(theta[best] - width, theta[best] + width),
            method="bounded",
            options={"xatol": 1e-12},
        )
        x_star = on_circle(res.x)
    else:
        d = (samples[best] - x0) / r
        start = np.array([math.acos(max(-1.0, min(1.0, d[2]))), math.atan2(d[1], d[0])])

        def on_sphere(angles: np.ndarray) -> np.ndarray:
            th, ph = angles
            return x0 + r * np.array(
                [math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)]
            )

        res = minimize(
            lambda a: float(_values(u, on_sphere(a))[0]),
            start,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-14},
        )
        x_star = on_sphere(res.x)
    u_star = float(_values(u, x_star)[0])
    if u_star > values[best]:
        x_star, u_star = samples[best], float(values[best])

    h = 1e-5 * max(r, 1e-3)
    lhs = float(np.linalg.norm(_gradient(u, x_star, h)))
    constant = 1.0 / (2 * r) if dim == 2 else 1.0 / (4 * r)
    rhs = constant * (float(_values(u, x0)[0]) - u_star)
    margin = lhs - rhs
    return Lemma3Report(
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        minimizer=x_star,
        passed=margin >= -1e-6 * max(1.0, abs(rhs)),
    )


def critical_point_scan(
    field: BaseField,
    grid: Sequence[Sequence[float]],
    pole_exclusion: float,
    refine: bool = False,
) -> ScanReport:
    """
    Minimum |grad G| over grid points outside a ball around the pole.

    With ``refine`` the grid argmin is polished by Nelder-Mead on |grad G|^2,
    staying inside the domain and outside the exclusion ball.
    """
    pole = np.asarray(field.pole, dtype=float)
    points = [
        np.asarray(p, dtype=float)
        for p in grid
        if np.linalg.norm(np.asarray(p, dtype=float) - pole) >= pole_exclusion and field.contains(p)
    ]
    if not points:
        return ScanReport(min_grad=math.inf, argmin=np.full(field.dim, np.nan), grid_size=0)
    norms = np.array([field.gradient_norm(p) for p in points])
    k = int(np.argmin(norms))
    min_grad, argmin = float(norms[k]), points[k]

    if refine:

        def objective(x: np.ndarray) -> float:
            if not field.contains(x) or np.linalg.norm(x - pole) < pole_exclusion:
                return math.inf
            g = field.gradient(x)
            return float(g @ g)

        res = minimize(
            objective,
            argmin,
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-30, "maxiter": 4000},
        )
        if math.isfinite(res.fun) and math.sqrt(res.fun) < min_grad:
            min_grad, argmin = math.sqrt(res.fun), np.asarray(res.x)
    logger.info("Critical-point scan over %d points: min |grad G| = %.3e", len(points), min_grad)
    return ScanReport(min_grad=min_grad, argmin=argmin, grid_size=len(points))


def _rotated(rng: np.random.Generator, eig: np.ndarray) -> np.ndarray:
    q = special_ortho_group.rvs(3, random_state=rng)
    return q @ np.diag(eig) @ q.T


def lemma1_equivalence_suite(trials: int = 1000, seed: int = DEFAULT_SEED) -> SuiteReport:
    """
    conformal_residual vanishes (<= 1e-10) exactly for equal eigenvalue triples.

    Half of the cases are rotated multiples of the identity, the rest random
    triples from [1e-3, 1e3] with relative spread at least 1e-3.
    """
    rng = np.random.default_rng(seed)
    report = SuiteReport(name="lemma1-equivalence", trials=trials)
    for i in range(trials):
        if i % 2 == 0:
            eig = np.full(3, 10 ** rng.uniform(-3, 3))
        else:
            eig = 10 ** rng.uniform(-3, 3, size=3)
            while eig.max() / eig.min() - 1 < 1e-3:
                eig = 10 ** rng.uniform(-3, 3, size=3)
        residual = conformal_residual(_rotated(rng, eig))
        equal = eig.max() / eig.min() - 1 < 1e-10
        if (residual <= 1e-10) != equal:
            report.failures += 1
        if equal:
            report.worst = max(report.worst, residual)
    return report


def _progression_gap(eig: np.ndarray) -> float:
    a, b, c = eig
    return min(
        abs(a * b - c * c) / (c * c), abs(a * c - b * b) / (b * b), abs(b * c - a * a) / (a * a)
    )


def lemma2_equivalence_suite(trials: int = 1000, seed: int = DEFAULT_SEED) -> SuiteReport:
    """
    weak_conformal_residual vanishes exactly for geometric progressions.

    Also cross-checks the residual against the factored form
    (l1 l2 - l3^2)(l1 l3 - l2^2)(l2 l3 - l1^2), whose eightfold value equals the
    unnormalized polynomial residual.
    """
    rng = np.random.default_rng(seed)
    report = SuiteReport(name="lemma2-equivalence", trials=trials)
    for i in range(trials):
        if i % 2 == 0:
            first, ratio = 10 ** rng.uniform(-1, 1), 10 ** rng.uniform(-0.5, 0.5)
            eig = rng.permutation(first * ratio ** np.arange(3))
        else:
            eig = 10 ** rng.uniform(-1, 1, size=3)
            while _progression_gap(eig) < 1e-2:
                eig = 10 ** rng.uniform(-1, 1, size=3)
        residual = weak_conformal_residual(_rotated(rng, eig))
        l1, l2, l3 = eig
        factored = 8 * abs((l1 * l2 - l3**2) * (l1 * l3 - l2**2) * (l3 * l2 - l1**2))
        factored /= eig.sum() ** 6
        progression = i % 2 == 0
        mismatch = abs(residual - factored) > 1e-8 * factored + 1e-12
        if (residual <= 1e-10) != progression or mismatch:
            report.failures += 1
        if progression:
            report.worst = max(report.worst, residual)
    return report


def lemma3_suite(
    trials: int = 1000, dim: int = 2, n_samples: int = 720, seed: int = DEFAULT_SEED
) -> SuiteReport:
    """Gradient bound on random harmonic polynomials of degree <= 5 on random sub-balls."""
    rng = np.random.default_rng(seed)
    report = SuiteReport(name=f"lemma3-{dim}d", trials=trials, worst=math.inf)
    for _ in range(trials):
        u = harmonic_polynomial(rng, dim)
        x0 = rng.uniform(-1.0, 1.0, size=dim)
        r = float(rng.uniform(0.1, 1.0))
        result = lemma3_check(u, x0, r, n_samples)
        if not result.passed:
            report.failures += 1
        report.worst = min(report.worst, result.margin / max(1.0, abs(result.rhs)))
    return report
