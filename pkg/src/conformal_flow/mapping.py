"""
The Riemann map (2D) and the weak-conformal map (3D) built from flow traces.

For a point x with exit direction a(x):
    2D: phi(x) = a(x) exp(-2 pi G(x, y)),          |phi'(x)| = 2 pi |grad G| exp(-2 pi G)
    3D: phi(x) = a(x) exp(-L(x)),                  |phi'(x)| = sqrt(4 pi |grad G|) exp(-L)
where L(x) is the weighted length of the trajectory from x to the boundary.
The pole maps to the origin. The map is fixed up to a rotation; the gauge is
the literal exit direction at the pole.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from itertools import repeat
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.spatial.distance import pdist

from .config import FlowSettings, GridSettings
from .constants import POLE_COLLAR_FACTOR
from .exceptions import ArgumentError, ConformalFlowError, DomainError
from .flow import (
    flow_parameter,
    shoot_from_pole,
    tail_estimate,
    trace_forward,
    trace_to_level,
    trace_to_pole,
    weighted_length,
)
from .geometry import DomainSpec
from .interfaces import BaseField
from .models import InjectivityReport, MapResult, TraceStats

logger = logging.getLogger(__name__)

DISTINCT_SOURCE = 1e-6
COINCIDENT_IMAGE = 1e-9


def _at_pole(field: BaseField, x: np.ndarray) -> bool:
    return float(np.linalg.norm(x - field.pole)) <= POLE_COLLAR_FACTOR * field.diameter


def _pole_result(field: BaseField, x: np.ndarray, settings: Optional[FlowSettings]) -> MapResult:
    return MapResult(
        source=x,
        image=np.zeros(field.dim),
        local_scale=local_scale_at_pole(field, settings=settings),
    )


def map_point_2d(
    field: BaseField, x: Sequence[float], settings: Optional[FlowSettings] = None
) -> MapResult:
    """
    Image of x under the planar Riemann map onto the unit disk.

    Raises:
        DomainError: x is not interior
        TraceError: the trajectory through x could not be traced

    Example:
        >>> result = map_point_2d(solve(DomainSpec.circle(), [0.0, 0.0]), [0.5, 0.0])
        >>> bool(np.allclose(result.image, [0.5, 0.0])), round(result.local_scale, 9)
        (True, 1.0)
    """
    x = np.asarray(x, dtype=float)
    if field.dim != 2:
        raise ArgumentError("map_point_2d needs a planar field")
    if _at_pole(field, x):
        return _pole_result(field, x, settings)
    g = field.value(x)
    modulus = math.exp(-2 * math.pi * g)
    trace = trace_to_pole(field, x, settings)
    return MapResult(
        source=x,
        image=trace.direction * modulus,
        local_scale=2 * math.pi * field.gradient_norm(x) * modulus,
        stats=TraceStats(steps=trace.steps, invariant_residual=trace.max_level_residual),
    )


def map_point_3d(
    field: BaseField, x: Sequence[float], settings: Optional[FlowSettings] = None
) -> MapResult:
    """
    Image of x under the weak-conformal map onto the unit ball.

    The modulus error of a truncated trace is bounded by its reported tail.

    Raises:
        DomainError: x is not interior
        FiniteLengthError: the weighted length does not converge
    """
    x = np.asarray(x, dtype=float)
    if field.dim != 3:
        raise ArgumentError("map_point_3d needs a spatial field")
    if _at_pole(field, x):
        return _pole_result(field, x, settings)
    forward = trace_forward(field, x, settings)
    length = weighted_length(field, forward)
    backward = trace_to_pole(field, x, settings)
    modulus = math.exp(-length)
    return MapResult(
        source=x,
        image=backward.direction * modulus,
        local_scale=math.sqrt(4 * math.pi * field.gradient_norm(x)) * modulus,
        stats=TraceStats(
            steps=forward.steps + backward.steps,
            invariant_residual=max(forward.max_level_residual, backward.max_level_residual),
            truncated=forward.truncated,
        ),
    )


def map_point(
    field: BaseField, x: Sequence[float], settings: Optional[FlowSettings] = None
) -> MapResult:
    """Dispatch to map_point_2d() or map_point_3d() by dimension."""
    if field.dim == 2:
        return map_point_2d(field, x, settings)
    return map_point_3d(field, x, settings)


def _map_one(field: BaseField, x: np.ndarray, settings: Optional[FlowSettings]) -> MapResult:
    try:
        return map_point(field, x, settings)
    except ConformalFlowError as exc:
        logger.debug("Mapping %s failed: %s", np.asarray(x).tolist(), exc)
        nan = np.full(field.dim, np.nan)
        return MapResult(
            source=np.asarray(x, dtype=float),
            image=nan,
            local_scale=math.nan,
            error=f"{type(exc).__name__}: {exc}",
        )


def map_grid(
    field: BaseField,
    points: Sequence[Sequence[float]],
    settings: Optional[FlowSettings] = None,
    jobs: int = 1,
) -> List[MapResult]:
    """
    Map every point; failures are recorded per point instead of aborting.

    Args:
        field: Green's function of the domain
        points: Source points, in output order
        settings: Flow settings
        jobs: Worker processes; results keep input order for any value

    Returns:
        One MapResult per input point
    """
    points = [np.asarray(p, dtype=float) for p in points]
    if not points:
        return []
    if jobs > 1 and len(points) > 1:
        chunksize = max(1, len(points) // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            results = list(
                executor.map(_map_one, repeat(field), points, repeat(settings), chunksize=chunksize)
            )
    else:
        results = [_map_one(field, p, settings) for p in points]
    failures = sum(1 for r in results if not r.ok)
    if failures:
        logger.warning("%d of %d grid points failed to map", failures, len(results))
    else:
        logger.info("Mapped %d grid points", len(results))
    return results


def injectivity_audit(results: Sequence[MapResult]) -> InjectivityReport:
    """
    Pairwise separation audit of mapped images.

    Pairs whose sources are at least 1e-6 apart but whose images are closer than
    1e-9 are flagged by their indices in ``results``. Failed results are skipped.

    Example:
        >>> injectivity_audit([]).passed
        True
    """
    indices = [i for i, r in enumerate(results) if r.ok]
    if len(indices) < 2:
        return InjectivityReport(min_ratio=math.inf, flags=[], pairs_checked=0)
    sources = np.array([results[i].source for i in indices])
    images = np.array([results[i].image for i in indices])
    source_dist = pdist(sources)
    image_dist = pdist(images)
    rows, cols = np.triu_indices(len(indices), 1)
    distinct = source_dist >= DISTINCT_SOURCE
    ratios = image_dist[distinct] / source_dist[distinct]
    flagged = np.nonzero(distinct & (image_dist < COINCIDENT_IMAGE))[0]
    flags = [(indices[rows[k]], indices[cols[k]]) for k in flagged]
    if flags:
        logger.warning("Injectivity audit flagged %d pairs", len(flags))
    return InjectivityReport(
        min_ratio=float(ratios.min()) if ratios.size else math.inf,
        flags=flags,
        pairs_checked=int(source_dist.size),
    )


def local_scale_at_pole(
    field: BaseField, radius: Optional[float] = None, settings: Optional[FlowSettings] = None
) -> float:
    """
    Numeric |phi'(y)|: mean of |phi(y + r u)| / r over coordinate directions u.

    Example:
        >>> round(local_scale_at_pole(solve(DomainSpec.circle(), [0.0, 0.0])), 9)
        1.0
    """
    r = radius if radius is not None else 1e-3 * field.diameter
    directions = np.vstack([np.eye(field.dim), -np.eye(field.dim)])
    moduli = []
    for u in directions:
        x = field.pole + r * u
        if field.dim == 2:
            moduli.append(math.exp(-2 * math.pi * field.value(x)))
        else:
            moduli.append(math.exp(-weighted_length(field, trace_forward(field, x, settings))))
    return float(np.mean(moduli)) / r


def inverse_map(
    field: BaseField, w: Sequence[float], settings: Optional[FlowSettings] = None
) -> np.ndarray:
    """
    Preimage of a point w of the unit disk / ball.

    Shoots the trajectory leaving the pole in direction w / |w| up to the level
    whose image modulus is |w|.

    Raises:
        DomainError: |w| >= 1
    """
    w = np.asarray(w, dtype=float)
    rho = float(np.linalg.norm(w))
    if rho >= 1.0:
        shape = "disk" if w.size == 2 else "ball"
        raise DomainError(f"{w.tolist()} is not inside the unit {shape}")
    if rho == 0.0:
        return np.array(field.pole, dtype=float)
    a = w / rho
    if field.dim == 2:
        return shoot_from_pole(field, a, rho, settings).end

    # 3D: locate the level whose remaining weighted length is -ln(rho)
    flow = settings if settings is not None else FlowSettings()
    trace = shoot_from_pole(field, a, flow_parameter(3, flow.eps_trunc), settings)
    remaining = trace.lengths[-1] - trace.lengths + tail_estimate(field, trace.end)
    wanted = -math.log(rho)
    if wanted >= remaining[0]:
        return trace.start
    k = int(np.nonzero(remaining >= wanted)[0][-1])
    if k == len(trace.t) - 1:
        return trace.end

    def excess(t: float) -> float:
        piece = trace_to_level(field, trace.x[k], t, settings)
        return remaining[k] - piece.weighted_length - wanted

    t_star = brentq(excess, trace.t[k], trace.t[k + 1], xtol=1e-14, rtol=1e-12)
    return trace_to_level(field, trace.x[k], t_star, settings).end


def polar_grid(spec: DomainSpec, radial: int, angular: int, fraction: float = 0.99) -> np.ndarray:
    """
    Points center + s r(theta) u(theta) for s in (0, fraction] and uniform theta.

    Example:
        >>> polar_grid(DomainSpec.circle(), 16, 16).shape
        (256, 2)
    """
    scales = fraction * np.arange(1, radial + 1) / radial
    theta = 2 * np.pi * np.arange(angular) / angular
    boundary = spec.points_at(theta) - spec.center
    return (spec.center + scales[:, None, None] * boundary[None, :, :]).reshape(-1, 2)


def spherical_grid(
    spec: DomainSpec, radial: int, polar: int, angular: int, fraction: float = 0.99
) -> np.ndarray:
    """Spherical analogue of polar_grid(); polar angles at cell midpoints."""
    scales = fraction * np.arange(1, radial + 1) / radial
    theta = np.pi * (np.arange(polar) + 0.5) / polar
    phi = 2 * np.pi * np.arange(angular) / angular
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    boundary = spec.points_at(th.ravel(), ph.ravel()) - spec.center
    return (spec.center + scales[:, None, None] * boundary[None, :, :]).reshape(-1, 3)


def box_grid(spec: DomainSpec, per_axis: int) -> np.ndarray:
    """Interior points of a uniform lattice over the bounding box of the domain."""
    half = 0.5 * spec.diameter
    axis = np.linspace(-half, half, per_axis)
    mesh = np.meshgrid(*([axis] * spec.dim), indexing="ij")
    points = spec.center + np.stack([m.ravel() for m in mesh], axis=-1)
    return np.array([p for p in points if spec.contains(p)]).reshape(-1, spec.dim)


def filter_grid(
    spec: DomainSpec,
    points: np.ndarray,
    pole: Sequence[float],
    pole_exclusion: float = 0.0,
    boundary_clearance: float = 0.0,
) -> np.ndarray:
    """Keep points pole_exclusion away from the pole and boundary_clearance inside the boundary."""
    pole = np.asarray(pole, dtype=float)
    keep = [
        p
        for p in points
        if np.linalg.norm(p - pole) >= pole_exclusion
        and spec.contains(p)
        and spec.clearance(p) >= boundary_clearance
    ]
    return np.array(keep).reshape(-1, spec.dim)


def grid_for(spec: DomainSpec, grid: GridSettings) -> np.ndarray:
    """Polar (2D) or spherical (3D) grid sized by the grid settings."""
    if spec.dim == 2:
        return polar_grid(spec, grid.radial, grid.angular, grid.max_radius_fraction)
    return spherical_grid(spec, grid.radial, grid.polar, grid.angular, grid.max_radius_fraction)
