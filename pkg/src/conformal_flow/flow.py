"""
Gradient-flow trajectories of Green's functions.

2D: dx/dt = -grad G exp(2 pi G) / (2 pi |grad G|^2), with G(x(t)) = (1/2pi) ln(1/t).
3D: dx/dt = -4 pi G^2 grad G / |grad G|^2,             with G(x(t)) = 1/(4 pi t).

Both systems carry an exact first integral. After every accepted
Runge-Kutta step the state is projected back onto {G = target_level(t)}
along grad G, so the level invariant holds to round-off on every sample.
In 3D the state is augmented with the weighted arc length
L = integral of sqrt(4 pi |grad G|) ds, which drives the radial coordinate of
the 3D map.

Example:
    >>> field = solve(DomainSpec.circle(), [0.0, 0.0])
    >>> trace = trace_to_pole(field, [0.0, -0.25])
    >>> bool(np.allclose(trace.direction, [0.0, -1.0]))
    True
"""

import logging
import math
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import chebyshev, legendre

from .config import FlowSettings
from .constants import (
    CRITICAL_GRADIENT,
    LEVEL_TOLERANCE_2D,
    LEVEL_TOLERANCE_3D,
    POLE_COLLAR_FACTOR,
)
from .exceptions import ArgumentError, CriticalPointError, FiniteLengthError, LevelRangeError
from .integrator import integrate
from .interfaces import BaseField
from .models import ConePatch, FlowTrace

logger = logging.getLogger(__name__)

POLE_START_FACTOR = 1e-7
NEWTON_ITERATIONS = 4
RETRACE_RTOL = 1e-12
RETRACE_ATOL = 1e-14


def target_level(dim: int, t: float) -> float:
    """
    Exact Green's function value a trajectory carries at flow parameter t.

    Raises:
        LevelRangeError: t outside (0, 1) in 2D or outside (0, inf) in 3D

    Example:
        >>> round(target_level(2, 0.5), 7)
        0.1103178
        >>> target_level(3, 1 / (4 * math.pi))
        1.0
    """
    if dim == 2:
        if not 0.0 < t <= 1.0:
            raise LevelRangeError(f"2D flow parameter must lie in (0, 1], got {t}")
        return math.log(1.0 / t) / (2 * math.pi)
    if not t > 0.0:
        raise LevelRangeError(f"3D flow parameter must be positive, got {t}")
    return 1.0 / (4 * math.pi * t)


def flow_parameter(dim: int, level: float) -> float:
    """Inverse of target_level(): the t at which a trajectory has G = level."""
    if dim == 2:
        return math.exp(-2 * math.pi * level)
    if not level > 0.0:
        raise LevelRangeError(f"3D level must be positive, got {level}")
    return 1.0 / (4 * math.pi * level)


def _level_tolerance(dim: int) -> float:
    return LEVEL_TOLERANCE_2D if dim == 2 else LEVEL_TOLERANCE_3D


def _velocity(field: BaseField, x: np.ndarray) -> Tuple[np.ndarray, float, float]:
    g = field.value(x)
    grad = field.gradient(x)
    norm_sq = float(grad @ grad)
    if norm_sq < CRITICAL_GRADIENT**2:
        raise CriticalPointError(
            f"gradient vanishes at {np.asarray(x).tolist()}",
            location=x,
            gradient_norm=math.sqrt(norm_sq),
        )
    if field.dim == 2:
        v = -grad * math.exp(2 * math.pi * g) / (2 * math.pi * norm_sq)
    else:
        v = -4 * math.pi * g * g * grad / norm_sq
    return v, g, norm_sq


def rhs(field: BaseField, x: Sequence[float]) -> np.ndarray:
    """
    Velocity of the gradient-flow system at x.

    Raises:
        CriticalPointError: |grad G(x)| < 1e-14
        DomainError: x exterior or inside the pole collar

    Example:
        >>> rhs(solve(DomainSpec.circle(), [0.0, 0.0]), [0.5, 0.0])
        array([1., 0.])
    """
    return _velocity(field, np.asarray(x, dtype=float))[0]


def _system(field: BaseField, with_length: bool):
    dim = field.dim

    def fun(t: float, y: np.ndarray) -> np.ndarray:
        v, g, norm_sq = _velocity(field, y[:dim])
        if not with_length:
            return v
        dl = (4 * math.pi) ** 1.5 * g * g / norm_sq**0.25
        return np.append(v, dl)

    return fun


def project_to_level(field: BaseField, x: np.ndarray, level: float) -> np.ndarray:
    """Newton iterations along grad G onto {G = level}."""
    x = np.array(x, dtype=float)
    floor = 1e-15 * max(1.0, abs(level))
    for _ in range(NEWTON_ITERATIONS):
        residual = field.value(x) - level
        if abs(residual) <= floor:
            break
        grad = field.gradient(x)
        x = x - residual * grad / float(grad @ grad)
    return x


def tail_estimate(field: BaseField, x: np.ndarray) -> float:
    """Weighted length from x to the boundary, sqrt(4 pi |grad G|) * G / |grad G|."""
    g = field.value(x)
    norm = field.gradient_norm(x)
    return math.sqrt(4 * math.pi * norm) * g / norm


def _settings(settings: Optional[FlowSettings]) -> FlowSettings:
    return settings if settings is not None else FlowSettings()


def _integrate(
    field: BaseField,
    x0: np.ndarray,
    t0: float,
    t1: float,
    settings: FlowSettings,
    with_length: bool = True,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Integrate from (t0, x0) to t1; returns t, x and cumulative lengths in integration order."""
    dim = field.dim
    with_length = with_length and dim == 3

    def post_step(t: float, y: np.ndarray) -> np.ndarray:
        y = y.copy()
        y[:dim] = project_to_level(field, y[:dim], target_level(dim, t))
        return y

    y0 = np.append(x0, 0.0) if with_length else np.asarray(x0, dtype=float)
    result = integrate(
        _system(field, with_length),
        t0,
        y0,
        t1,
        rtol=settings.rtol,
        atol=settings.atol,
        max_steps=settings.max_steps,
        post_step=post_step,
    )
    ys = np.array(result.y)
    lengths = ys[:, dim] if with_length else np.zeros(len(result.t))
    return np.array(result.t), ys[:, :dim], lengths, result.steps


def _build_trace(
    field: BaseField,
    t: np.ndarray,
    x: np.ndarray,
    lengths: np.ndarray,
    steps: int,
    **extra,
) -> FlowTrace:
    if t.size > 1 and t[0] > t[-1]:
        t, x, lengths = t[::-1], x[::-1], lengths[::-1]
    lengths = lengths - lengths[0]
    residual = np.array(
        [abs(field.value(xi) - target_level(field.dim, ti)) for ti, xi in zip(t, x)]
    )
    tolerance = _level_tolerance(field.dim)
    if residual.size and residual.max() > tolerance:
        logger.warning(
            "Level invariant drift %.3e exceeds %.1e on a %dD trace",
            residual.max(), tolerance, field.dim,
        )
    return FlowTrace(
        dim=field.dim,
        t=t,
        x=x,
        level_residual=residual,
        weighted_length=float(lengths[-1]) if field.dim == 3 else 0.0,
        lengths=lengths if field.dim == 3 else np.zeros(0),
        steps=steps,
        **extra,
    )


def trace_forward(
    field: BaseField, x0: Sequence[float], settings: Optional[FlowSettings] = None
) -> FlowTrace:
    """
    Follow the flow from x0 toward the boundary.

    2D traces stop at t = 1 - eps_bdry. 3D traces stop once G falls to eps_trunc;
    they are flagged as truncated and carry the estimated weighted-length tail.

    Raises:
        DomainError: x0 exterior or inside the pole collar
        CriticalPointError: the gradient vanishes along the way
        StiffnessError: the integrator step size underflowed

    Example:
        >>> trace = trace_forward(solve(DomainSpec.circle(), [0.0, 0.0]), [0.5, 0.0])
        >>> bool(np.allclose(trace.x[:, 1], 0.0))
        True
    """
    settings = _settings(settings)
    x0 = np.asarray(x0, dtype=float)
    dim = field.dim
    t0 = flow_parameter(dim, field.value(x0))
    if dim == 2:
        t_end = 1.0 - settings.eps_bdry
        extra = {}
    else:
        t_end = flow_parameter(3, settings.eps_trunc)
        extra = {"truncated": True, "truncation_level": settings.eps_trunc}

    if t0 >= t_end:
        t, x, lengths, steps = np.array([t0]), x0[None, :], np.zeros(1), 0
    else:
        t, x, lengths, steps = _integrate(field, x0, t0, t_end, settings)
    trace = _build_trace(field, t, x, lengths, steps, **extra)
    if dim == 3:
        trace.tail = tail_estimate(field, trace.end)
    logger.debug(
        "Forward trace from %s: %d steps, t in [%.3g, %.3g]", x0.tolist(), steps, t0, t[-1]
    )
    return trace


def trace_to_level(
    field: BaseField,
    x0: Sequence[float],
    t_target: float,
    settings: Optional[FlowSettings] = None,
) -> FlowTrace:
    """
    Follow the trajectory through x0 to the level G = target_level(t_target).

    Integrates forward or backward in t as needed.

    Raises:
        LevelRangeError: t_target outside the admissible range
    """
    settings = _settings(settings)
    x0 = np.asarray(x0, dtype=float)
    target_level(field.dim, t_target)
    t0 = flow_parameter(field.dim, field.value(x0))
    t, x, lengths, steps = _integrate(field, x0, t0, t_target, settings)
    return _build_trace(field, t, x, lengths, steps)


def _pole_scale(field: BaseField) -> float:
    if field.dim == 2:
        return math.exp(2 * math.pi * field.regular_part_at_pole())
    return 1.0


def _direction_from_cuts(
    field: BaseField, t1: float, x1: np.ndarray, t2: float, x2: np.ndarray
) -> np.ndarray:
    scale = _pole_scale(field)
    v1 = (x1 - field.pole) / (t1 * scale)
    v2 = (x2 - field.pole) / (t2 * scale)
    # Richardson over {t, t/2} removes the linear term of the pole expansion
    a = (t1 * v2 - t2 * v1) / (t1 - t2)
    return a / np.linalg.norm(a)


def _t_cut(field: BaseField, settings: FlowSettings) -> float:
    t_cut = settings.t_cut_factor * field.diameter
    if field.dim == 2:
        t_cut = min(t_cut, 0.5)
    return t_cut


def trace_to_pole(
    field: BaseField, x0: Sequence[float], settings: Optional[FlowSettings] = None
) -> FlowTrace:
    """
    Follow the trajectory through x0 back toward the pole and extract its exit direction.

    The trace is cut at t_cut = t_cut_factor * diameter and at t_cut / 2; the unit
    direction a(x0) comes from the pole expansion x(t) = y + a t exp(2 pi h(y, y)) + o(t)
    in 2D and x(t) = y + a t + 4 pi a t^2 h(y, y) + o(t^2) in 3D, extrapolated over
    both cuts.

    Example:
        >>> trace = trace_to_pole(solve(DomainSpec.sphere(), [0.0, 0.0, 0.0]), [0.1, 0.2, 0.2])
        >>> np.round(trace.direction * 3, 6)
        array([1., 2., 2.])
    """
    settings = _settings(settings)
    x0 = np.asarray(x0, dtype=float)
    dim = field.dim
    t0 = flow_parameter(dim, field.value(x0))
    t_cut = _t_cut(field, settings)

    t_a, x_a, l_a, steps_a = _integrate(field, x0, t0, t_cut, settings)
    t_b, x_b, l_b, steps_b = _integrate(field, x_a[-1], t_cut, t_cut / 2, settings)

    direction = _direction_from_cuts(field, t_cut, x_a[-1], t_cut / 2, x_b[-1])
    t = np.concatenate([t_a, t_b[1:]])
    x = np.concatenate([x_a, x_b[1:]])
    lengths = np.concatenate([l_a, l_a[-1] + l_b[1:]])
    order = np.argsort(t)
    trace = _build_trace(field, t[order], x[order], lengths[order], steps_a + steps_b)
    trace.direction = direction
    logger.debug("Direction of %s: %s", x0.tolist(), direction.tolist())
    return trace


def shoot_from_pole(
    field: BaseField,
    direction: Sequence[float],
    t: float,
    settings: Optional[FlowSettings] = None,
) -> FlowTrace:
    """
    The trajectory leaving the pole in ``direction``, integrated up to level t.

    It starts at t_s = 1e-7 * diameter (or t / 2 if smaller) from the pole
    expansion and is projected onto the exact level before integrating.
    Only positions are integrated, so the weighted length of the result is 0.

    Raises:
        LevelRangeError: t is out of range or its level set reaches into the pole collar
    """
    settings = _settings(settings)
    dim = field.dim
    target_level(dim, t)
    a = np.asarray(direction, dtype=float)
    a = a / np.linalg.norm(a)
    t_s = min(POLE_START_FACTOR * field.diameter, 0.5 * t)
    if t_s <= 10 * POLE_COLLAR_FACTOR * field.diameter:
        raise LevelRangeError(f"level set of t={t:.3g} reaches into the pole collar")
    h = field.regular_part_at_pole()
    if dim == 2:
        x_s = field.pole + a * t_s * math.exp(2 * math.pi * h)
    else:
        x_s = field.pole + a * (t_s + 4 * math.pi * h * t_s * t_s)
    x_s = project_to_level(field, x_s, target_level(dim, t_s))
    t_arr, x, lengths, steps = _integrate(field, x_s, t_s, t, settings, with_length=False)
    trace = _build_trace(field, t_arr, x, lengths, steps)
    trace.direction = a
    return trace


def _angle(a: np.ndarray, b: np.ndarray) -> float:
    if a.size == 2:
        cross = abs(a[0] * b[1] - a[1] * b[0])
    else:
        cross = float(np.linalg.norm(np.cross(a, b)))
    return math.atan2(cross, float(a @ b))


def direction_constancy_check(
    field: BaseField, trace: FlowTrace, k: int = 5, settings: Optional[FlowSettings] = None
) -> float:
    """
    Recompute the exit direction from k samples spread along the trace.

    Re-traces run at rtol <= 1e-12 and atol <= 1e-14.

    Returns:
        Largest pairwise angle between the recomputed directions, in radians
    """
    if k < 1:
        raise ArgumentError(f"k must be positive, got {k}")
    settings = _settings(settings)
    settings = replace(
        settings, rtol=min(settings.rtol, RETRACE_RTOL), atol=min(settings.atol, RETRACE_ATOL)
    )
    indices = np.unique(np.linspace(0, len(trace.t) - 1, k).round().astype(int))
    directions: List[np.ndarray] = [
        trace_to_pole(field, trace.x[i], settings).direction for i in indices
    ]
    worst = 0.0
    for i in range(len(directions)):
        for j in range(i + 1, len(directions)):
            worst = max(worst, _angle(directions[i], directions[j]))
    return worst


def _orthonormal_frame(axis: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    e3 = axis / np.linalg.norm(axis)
    helper = np.eye(3)[int(np.argmin(np.abs(e3)))]
    e1 = np.cross(e3, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(e3, e1), e3


def _chebyshev_nodes(n: int) -> np.ndarray:
    return np.cos(np.pi * (np.arange(n) + 0.5) / n)


def _flux_2d(
    field: BaseField, patch: ConePatch, settings: FlowSettings, nodes: int
) -> float:
    axis = np.asarray(patch.axis, dtype=float)
    base = math.atan2(axis[1], axis[0])
    half = 0.5 * patch.angle
    s = _chebyshev_nodes(nodes)
    points = np.array(
        [
            shoot_from_pole(
                field,
                [math.cos(base + half * si), math.sin(base + half * si)],
                patch.level,
                settings,
            ).end
            for si in s
        ]
    )
    coef = chebyshev.chebfit(s, points, nodes - 1)
    s_q, w_q = legendre.leggauss(2 * nodes)
    x_q = chebyshev.chebval(s_q, coef).T
    dx_q = chebyshev.chebval(s_q, chebyshev.chebder(coef)).T
    speed = np.linalg.norm(dx_q, axis=1)
    grad = np.array([field.gradient_norm(xi) for xi in x_q])
    return float(np.sum(w_q * grad * speed))


def _flux_3d(
    field: BaseField, patch: ConePatch, settings: FlowSettings, nodes: int
) -> float:
    e1, e2, e3 = _orthonormal_frame(np.asarray(patch.axis, dtype=float))
    theta_max = math.acos(max(-1.0, min(1.0, 1.0 - patch.angle / (2 * math.pi))))
    n_theta, n_phi = nodes, 2 * nodes
    s = _chebyshev_nodes(n_theta)
    theta = 0.5 * theta_max * (s + 1.0)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    grid = np.empty((n_theta, n_phi, 3))
    for i, th in enumerate(theta):
        for j, ph in enumerate(phi):
            a = math.sin(th) * (math.cos(ph) * e1 + math.sin(ph) * e2) + math.cos(th) * e3
            grid[i, j] = shoot_from_pole(field, a, patch.level, settings).end

    wavenumbers = np.fft.fftfreq(n_phi, 1.0 / n_phi)
    wavenumbers[n_phi // 2] = 0.0
    d_phi = np.fft.ifft(1j * wavenumbers[None, :, None] * np.fft.fft(grid, axis=1), axis=1).real

    flat = grid.reshape(n_theta, -1)
    flat_phi = d_phi.reshape(n_theta, -1)
    coef = chebyshev.chebfit(s, flat, n_theta - 1)
    coef_phi = chebyshev.chebfit(s, flat_phi, n_theta - 1)
    s_q, w_q = legendre.leggauss(2 * n_theta)
    jac = 0.5 * theta_max
    x_q = chebyshev.chebval(s_q, coef).T.reshape(len(s_q), n_phi, 3)
    x_theta = (chebyshev.chebval(s_q, chebyshev.chebder(coef)).T / jac).reshape(len(s_q), n_phi, 3)
    x_phi = chebyshev.chebval(s_q, coef_phi).T.reshape(len(s_q), n_phi, 3)
    area = np.linalg.norm(np.cross(x_theta, x_phi), axis=-1)
    grad = np.array([[field.gradient_norm(x) for x in row] for row in x_q])
    weights = (w_q * jac)[:, None] * (2 * np.pi / n_phi)
    return float(np.sum(weights * grad * area))


def flux_through_patch(
    field: BaseField,
    patch: ConePatch,
    settings: Optional[FlowSettings] = None,
    nodes: Optional[int] = None,
) -> float:
    """
    Flux of grad G through the part of a level set whose exit directions lie in a cone.

    The patch is parametrized by shooting trajectories from a fan (2D) or a cone
    (3D) of exit directions to level ``patch.level``; the level set is
    interpolated in Chebyshev form along the opening angle (and spectrally in
    azimuth in 3D) and |grad G| is integrated over it. The result is the flux
    magnitude, to be compared with angle / (2 pi) in 2D and angle / (4 pi) in 3D.

    Raises:
        ArgumentError: angle outside (0, 2 pi] (2D) or (0, 4 pi] (3D)
        LevelRangeError: the level set reaches into the pole collar
    """
    settings = _settings(settings)
    if nodes is None:
        nodes = 24 if field.dim == 2 else 12
    full = 2 * math.pi if field.dim == 2 else 4 * math.pi
    if not 0.0 < patch.angle <= full * (1 + 1e-12):
        raise ArgumentError(f"cone angle must lie in (0, {full:.6g}], got {patch.angle}")
    if nodes < 2:
        raise ArgumentError(f"need at least 2 quadrature nodes, got {nodes}")
    if field.dim == 2:
        flux = _flux_2d(field, patch, settings, nodes)
    else:
        flux = _flux_3d(field, patch, settings, nodes)
    logger.debug("Flux through cone of angle %.6g at t=%.6g: %.12g", patch.angle, patch.level, flux)
    return flux


def weighted_length(field: BaseField, trace: FlowTrace) -> float:
    """
    Weighted length of a forward 3D trace, sqrt(4 pi |grad G|) integrated along it.

    Truncated traces include the estimated tail to the boundary. The partial
    sums must settle: over the last decade of t the increment must stay
    comparable to the tail estimate.

    Raises:
        ArgumentError: the trace is not three-dimensional
        FiniteLengthError: the integral does not converge

    Example:
        >>> ball = solve(DomainSpec.sphere(), [0.0, 0.0, 0.0])
        >>> round(weighted_length(ball, trace_forward(ball, [0.0, 0.0, 0.5])), 6)
        0.693147
    """
    if trace.dim != 3:
        raise ArgumentError("weighted length is defined for 3D traces only")
    if len(trace.t) < 2:
        return float(trace.tail) if trace.truncated else 0.0
    total = trace.weighted_length + (trace.tail if trace.truncated else 0.0)
    if not math.isfinite(total):
        raise FiniteLengthError("weighted length is not finite")
    if trace.truncated and trace.lengths.size == len(trace.t):
        decade = trace.t[-1] / 10.0
        if trace.t[0] <= decade:
            idx = int(np.searchsorted(trace.t, decade))
            increment = float(trace.lengths[-1] - trace.lengths[idx])
            if increment > 50.0 * trace.tail + 1e-12:
                raise FiniteLengthError(
                    f"weighted length still growing near the boundary "
                    f"(last decade {increment:.3e}, tail {trace.tail:.3e})"
                )
    return float(total)
