"""
Runge-Kutta integration with a post-step correction hook.

``ProjectedRK45`` is scipy's Dormand-Prince 5(4) solver with two changes to
its step: after every accepted step an optional ``post_step`` callback may
replace the state (the flow tracer projects back onto the exact level set),
and stage evaluations that raise a recoverable error (leaving the domain)
count as rejected steps instead of aborting the run.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple, Type

import numpy as np
from scipy.integrate import RK45
from scipy.integrate._ivp.rk import MAX_FACTOR, MIN_FACTOR, SAFETY, rk_step

from .exceptions import DomainError, StiffnessError

logger = logging.getLogger(__name__)

RHS = Callable[[float, np.ndarray], np.ndarray]
PostStep = Callable[[float, np.ndarray], np.ndarray]

# step shrink factor after a recoverable stage failure
REJECT_FACTOR = 0.25


@dataclass
class IntegrationResult:
    """Accepted states of one integration run, including the initial state."""

    t: List[float] = field(default_factory=list)
    y: List[np.ndarray] = field(default_factory=list)
    steps: int = 0
    rejected: int = 0

    @property
    def final(self) -> Tuple[float, np.ndarray]:
        return self.t[-1], self.y[-1]


class ProjectedRK45(RK45):
    """
    RK45 whose accepted states pass through ``post_step``.

    Attributes:
        post_step: Callback (t, y) -> y applied to every accepted state
        recoverable: Exceptions raised by the right-hand side or post_step
            that reject a step instead of aborting
        rejected: Number of rejected step attempts so far

    Dense output is not corrected by the projection and is not used.
    """

    def __init__(
        self,
        fun: RHS,
        t0: float,
        y0: np.ndarray,
        t_bound: float,
        post_step: Optional[PostStep] = None,
        recoverable: Tuple[Type[BaseException], ...] = (DomainError,),
        **options,
    ):
        super().__init__(fun, t0, y0, t_bound, **options)
        self.post_step = post_step
        self.recoverable = recoverable
        self.rejected = 0

    def _step_impl(self):
        t = self.t
        y = self.y

        min_step = 10 * np.abs(np.nextafter(t, self.direction * np.inf) - t)
        if self.h_abs > self.max_step:
            h_abs = self.max_step
        elif self.h_abs < min_step:
            h_abs = min_step
        else:
            h_abs = self.h_abs

        step_rejected = False
        while True:
            if h_abs < min_step:
                return False, self.TOO_SMALL_STEP
            h = h_abs * self.direction
            t_new = t + h
            if self.direction * (t_new - self.t_bound) > 0:
                t_new = self.t_bound
            h = t_new - t
            h_abs = np.abs(h)

            try:
                y_new, f_new = rk_step(self.fun, t, y, self.f, h, self.A, self.B, self.C, self.K)
            except self.recoverable:
                self.rejected += 1
                step_rejected = True
                h_abs *= REJECT_FACTOR
                continue

            scale = self.atol + np.maximum(np.abs(y), np.abs(y_new)) * self.rtol
            error_norm = self._estimate_error_norm(self.K, h, scale)
            if not np.isfinite(error_norm) or error_norm >= 1:
                self.rejected += 1
                step_rejected = True
                if np.isfinite(error_norm):
                    h_abs *= max(MIN_FACTOR, SAFETY * error_norm**self.error_exponent)
                else:
                    h_abs *= MIN_FACTOR
                continue

            if self.post_step is not None:
                try:
                    y_new = self.post_step(t_new, y_new)
                    f_new = self.fun(t_new, y_new)
                except self.recoverable:
                    self.rejected += 1
                    step_rejected = True
                    h_abs *= REJECT_FACTOR
                    continue

            if error_norm == 0:
                factor = MAX_FACTOR
            else:
                factor = min(MAX_FACTOR, SAFETY * error_norm**self.error_exponent)
            if step_rejected:
                factor = min(1.0, factor)
            break

        self.h_previous = h
        self.y_old = y
        self.t = t_new
        self.y = y_new
        self.h_abs = h_abs * factor
        self.f = f_new
        return True, None


def _first_step(fun: RHS, t0: float, y0: np.ndarray, span: float, rtol: float, atol: float):
    # scipy's first-order estimate without its trial Euler step, which may leave the domain
    f0 = np.asarray(fun(t0, y0), dtype=float)
    scale = atol + rtol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((y0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    if not np.isfinite(h) or h <= 0.0:
        h = 1e-6
    return min(h, abs(span))


def integrate(
    fun: RHS,
    t0: float,
    y0: np.ndarray,
    t1: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_steps: int = 20000,
    post_step: Optional[PostStep] = None,
    first_step: Optional[float] = None,
    recoverable: Tuple[Type[BaseException], ...] = (DomainError,),
) -> IntegrationResult:
    """
    Integrate y' = fun(t, y) from t0 to exactly t1 (either direction).

    Raises:
        StiffnessError: the step size underflowed or the step budget ran out

    Example:
        >>> result = integrate(lambda t, y: -y, 0.0, np.array([1.0]), 1.0)
        >>> round(float(result.y[-1][0]), 8)
        0.36787944
    """
    y0 = np.array(y0, dtype=float)
    t0, t1 = float(t0), float(t1)
    result = IntegrationResult(t=[t0], y=[y0.copy()])
    if t1 == t0:
        return result
    if first_step is None:
        first_step = _first_step(fun, t0, y0, t1 - t0, rtol, atol)
    solver = ProjectedRK45(
        fun,
        t0,
        y0,
        t1,
        post_step=post_step,
        recoverable=recoverable,
        rtol=rtol,
        atol=atol,
        first_step=min(abs(first_step), abs(t1 - t0)),
    )
    while solver.status == "running":
        if result.steps + solver.rejected >= max_steps:
            raise StiffnessError(
                f"step budget of {max_steps} exhausted at t={solver.t:.6g}",
                location=solver.y,
                t=solver.t,
            )
        message = solver.step()
        if solver.status == "failed":
            raise StiffnessError(
                f"step size underflow at t={solver.t:.6g}: {message}",
                location=solver.y,
                t=solver.t,
            )
        result.t.append(float(solver.t))
        result.y.append(solver.y.copy())
        result.steps += 1

    result.rejected = solver.rejected
    logger.debug(
        "Integrated to t=%.6g in %d steps (%d rejected)",
        result.t[-1],
        result.steps,
        result.rejected,
    )
    return result
