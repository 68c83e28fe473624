"""One-step integrators, node schedules and the driver loop."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from .ode_core import BlowUpError, EvaluationError, State, Trajectory

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Uniform:
    h: float
    end: float

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"uniform step must be positive, got h={self.h}")
        if not math.isfinite(self.end):
            raise ValueError("uniform schedule needs a finite end time")


@dataclass(frozen=True)
class Geometric:
    """Nodes with ``t_{n+1} = t_n + h_hat * (t_s - t_{n+1})``, cut off ``delta`` short of ``t_s``."""

    h_hat: float
    delta: float

    def __post_init__(self):
        if not (self.h_hat > 0 and math.isfinite(self.h_hat)):
            raise ValueError(f"h_hat must be positive, got {self.h_hat}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")

    def step_count(self) -> int:
        """Number of steps until the remaining fraction drops to ``delta``."""
        return math.ceil(math.log(1.0 / self.delta) / math.log1p(self.h_hat) - 1e-12)


StepSchedule = Uniform | Geometric


class StepMethod(str, enum.Enum):
    FORWARD_EULER = "forward-euler"
    SEMI_IMPLICIT_EULER = "semi-implicit-euler"
    RK4 = "rk4"


def _checked(problem, t, x, v) -> State:
    s = State(t, x, v)
    if not s.is_finite():
        raise BlowUpError(f"{problem.label}: non-finite state at t={t} (x={x}, v={v})")
    return s


def forward_euler_step(problem, s: State, h: float) -> State:
    """Position advances with the old velocity."""
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    acc = problem.accel(s.t, s.x, s.v)
    return _checked(problem, s.t + h, s.x + h * s.v, s.v + h * acc)


def semi_implicit_euler_step(problem, s: State, h: float) -> State:
    """Velocity first; position advances with the new velocity."""
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    v_new = s.v + h * problem.accel(s.t, s.x, s.v)
    return _checked(problem, s.t + h, s.x + h * v_new, v_new)


def rk4_step(problem, s: State, h: float) -> State:
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    t, x, v = s
    f = problem.accel
    half = 0.5 * h
    k1x, k1v = v, f(t, x, v)
    k2x, k2v = v + half * k1v, f(t + half, x + half * k1x, v + half * k1v)
    k3x, k3v = v + half * k2v, f(t + half, x + half * k2x, v + half * k2v)
    k4x, k4v = v + h * k3v, f(t + h, x + h * k3x, v + h * k3v)
    return _checked(
        problem,
        t + h,
        x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    )


STEPPERS = {
    StepMethod.FORWARD_EULER: forward_euler_step,
    StepMethod.SEMI_IMPLICIT_EULER: semi_implicit_euler_step,
    StepMethod.RK4: rk4_step,
}


def build_grid(schedule: StepSchedule, problem, start: float | None = None) -> np.ndarray:
    """Precompute the node sequence for ``schedule`` starting at ``start``.

    ``start`` defaults to ``problem.domain_start``. Uniform grids place nodes at
    ``start + n*h`` and close with ``end`` itself when ``end`` is not a whole
    number of steps away. Geometric grids shrink the distance to the singular
    point by ``1 + h_hat`` per step and stop at the first node within
    ``delta * (t_s - start)`` of it.
    """
    t0 = problem.domain_start if start is None else float(start)
    if isinstance(schedule, Uniform):
        span = schedule.end - t0
        if span < 0:
            raise ValueError(f"uniform schedule ends at {schedule.end}, before start {t0}: no nodes")
        n = math.floor(span / schedule.h + 1e-9)
        nodes = t0 + schedule.h * np.arange(n + 1, dtype=np.float64)
        if span - n * schedule.h > 1e-9 * schedule.h:
            nodes = np.append(nodes, schedule.end)
        elif n > 0:
            nodes[-1] = schedule.end
        return nodes
    if isinstance(schedule, Geometric):
        ts = problem.singular_point
        if not math.isfinite(ts):
            raise ValueError(f"{problem.label} has no finite singular point; geometric grid undefined")
        if not t0 < ts:
            raise ValueError("geometric grid must start left of the singular point")
        n_steps = schedule.step_count()
        # distance recursion keeps (t_s - t_{n+1}) * (1 + h_hat) == t_s - t_n to roundoff
        dist = (ts - t0) * (1.0 + schedule.h_hat) ** -np.arange(n_steps + 1, dtype=np.float64)
        nodes = ts - dist
        nodes[0] = t0
        return nodes
    raise TypeError(f"unknown schedule {schedule!r}")


def refine_grid(nodes: np.ndarray, k: int) -> np.ndarray:
    """Split every interval into ``k`` equal substeps; original nodes sit at every ``k``-th index."""
    if k < 1:
        raise ValueError("refinement factor must be >= 1")
    nodes = np.asarray(nodes, dtype=np.float64)
    if k == 1 or nodes.size < 2:
        return nodes.copy()
    frac = np.arange(k, dtype=np.float64) / k
    inner = nodes[:-1, None] + frac[None, :] * np.diff(nodes)[:, None]
    return np.append(inner.ravel(), nodes[-1])


def integrate(problem, s0: State, schedule, method: StepMethod | str) -> Trajectory:
    """March ``method`` across the grid; stop early (``truncated=True``) on blow-up or a domain violation.

    ``schedule`` is a :class:`Uniform`/:class:`Geometric` schedule (built from
    ``s0.t``) or a precomputed node array whose first entry equals ``s0.t``.
    """
    method = StepMethod(method)
    step = STEPPERS[method]
    if isinstance(schedule, (Uniform, Geometric)):
        nodes = build_grid(schedule, problem, start=s0.t)
    else:
        nodes = np.asarray(schedule, dtype=np.float64)
        if nodes.size == 0:
            raise ValueError("empty grid")
        if nodes[0] != s0.t:
            raise ValueError(f"initial time {s0.t} does not match first grid node {nodes[0]}")
    s0 = State(float(s0.t), float(s0.x), float(s0.v))
    if not s0.is_finite():
        raise ValueError(f"initial state not finite: {s0}")

    out = np.empty((nodes.size, 3))
    out[0] = s0
    s = s0
    reason = None
    filled = 1
    for i in range(1, nodes.size):
        h = nodes[i] - nodes[i - 1]
        try:
            # overflow to inf is caught as a blow-up below; no need for numpy to warn too
            with np.errstate(over="ignore", invalid="ignore"):
                s = step(problem, s, h)
        except (EvaluationError, BlowUpError, OverflowError, ZeroDivisionError) as exc:
            reason = f"{type(exc).__name__}: {exc}"
            log.info("integration of %s stopped at t=%g: %s", problem.label, nodes[i - 1], reason)
            break
        # pin node time to the grid so grids shared between runs stay identical
        s = State(float(nodes[i]), s.x, s.v)
        out[i] = s
        filled += 1
    out = out[:filled]
    return Trajectory(out[:, 0], out[:, 1], out[:, 2], truncated=reason is not None, reason=reason)
