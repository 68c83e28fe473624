"""Two-point boundary value problems reduced to initial value problems.

Linear problems are solved by superposing two IVP solutions; nonlinear ones by
secant iteration on the unknown initial slope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .ode_core import LinearProblem, SolverError, State, Trajectory
from .steppers import Geometric, StepMethod, Uniform, build_grid, integrate


class TrajectoryEscaped(SolverError):
    """The IVP for a trial slope blew up or left the problem domain before reaching ``b``."""

    def __init__(self, message: str, slope: float, trajectory: Trajectory):
        super().__init__(message)
        self.slope = slope
        self.trajectory = trajectory


class DegenerateFundamentalSolution(SolverError):
    pass


class ShootingNotConverged(SolverError):
    def __init__(self, message: str, best: "ShootResult"):
        super().__init__(message)
        self.best = best


class StalledSecant(ShootingNotConverged):
    pass


@dataclass(frozen=True)
class BvpSpec:
    """``x'' = f(t, x, x')`` on ``[t_left, t_right]``.

    ``left_kind='dirichlet'`` fixes ``x(a) = alpha`` and shoots on ``x'(a)``;
    ``'neumann'`` fixes ``x'(a) = alpha`` and shoots on ``x(a)``. The right
    condition is ``x(b) = beta`` or, with ``right_kind='neumann'``, ``x'(b) = beta``.
    """

    problem: object
    t_left: float
    t_right: float
    alpha: float
    beta: float
    left_kind: Literal["dirichlet", "neumann"] = "dirichlet"
    right_kind: Literal["dirichlet", "neumann"] = "dirichlet"

    def __post_init__(self):
        if not self.t_left < self.t_right:
            raise ValueError(f"need t_left < t_right, got [{self.t_left}, {self.t_right}]")
        if self.t_right > self.problem.singular_point:
            raise ValueError("right boundary lies beyond the singular point")
        if self.left_kind not in ("dirichlet", "neumann") or self.right_kind not in ("dirichlet", "neumann"):
            raise ValueError("boundary kinds are 'dirichlet' or 'neumann'")

    def initial_state(self, s: float) -> State:
        if self.left_kind == "dirichlet":
            return State(self.t_left, self.alpha, s)
        return State(self.t_left, s, self.alpha)

    def mismatch(self, end: State) -> float:
        return (end.x if self.right_kind == "dirichlet" else end.v) - self.beta


@dataclass
class ShootResult:
    slope: float
    trajectory: Trajectory
    residual: float
    iterations: int
    converged: bool = True


def bvp_grid(bvp: BvpSpec, schedule) -> np.ndarray:
    """Nodes from ``t_left`` to ``t_right``; a geometric grid ends at its own cutoff node instead."""
    if isinstance(schedule, Uniform):
        return build_grid(Uniform(schedule.h, bvp.t_right), bvp.problem, start=bvp.t_left)
    if isinstance(schedule, Geometric):
        return build_grid(schedule, bvp.problem, start=bvp.t_left)
    nodes = np.asarray(schedule, dtype=np.float64)
    if nodes[0] != bvp.t_left:
        raise ValueError("grid must start at t_left")
    return nodes


def _shoot_once(bvp: BvpSpec, s: float, nodes, method) -> tuple[float, Trajectory]:
    traj = integrate(bvp.problem, bvp.initial_state(s), nodes, method)
    if traj.truncated:
        raise TrajectoryEscaped(
            f"trajectory with slope {s!r} escaped at t={traj.t[-1]:g}: {traj.reason}", s, traj
        )
    return bvp.mismatch(traj.final), traj


def boundary_residual(bvp: BvpSpec, s: float, schedule, method=StepMethod.RK4) -> float:
    """``x(b; s) - beta`` for the IVP started from ``(a, alpha, s)``."""
    return _shoot_once(bvp, s, bvp_grid(bvp, schedule), method)[0]


def shoot_linear(bvp: BvpSpec, schedule, method=StepMethod.RK4) -> ShootResult:
    """Linear chasing: ``x = x1 + c*x2`` with ``x1`` solving the full equation from
    ``(alpha, 0)`` and ``x2`` the homogeneous one from ``(0, 1)``."""
    problem = bvp.problem
    if not isinstance(problem, LinearProblem):
        raise TypeError("shoot_linear needs a LinearProblem")
    if bvp.left_kind != "dirichlet":
        raise ValueError("linear chasing is implemented for a Dirichlet left boundary")
    nodes = bvp_grid(bvp, schedule)
    x1 = integrate(problem, State(bvp.t_left, bvp.alpha, 0.0), nodes, method)
    x2 = integrate(problem.homogeneous(), State(bvp.t_left, 0.0, 1.0), nodes, method)
    for part in (x1, x2):
        if part.truncated:
            raise TrajectoryEscaped(f"fundamental solution escaped: {part.reason}", math.nan, part)
    end1, end2 = x1.final, x2.final
    u1, u2 = (end1.x, end2.x) if bvp.right_kind == "dirichlet" else (end1.v, end2.v)
    if abs(u2) < 1e-12:
        raise DegenerateFundamentalSolution(
            f"degenerate fundamental solution: x2(b) = {u2!r}; superposition undefined"
        )
    c = (bvp.beta - u1) / u2
    traj = x1.superpose(x2, c)
    return ShootResult(slope=c, trajectory=traj, residual=bvp.mismatch(traj.final), iterations=1)


def shoot_secant(
    bvp: BvpSpec,
    s0: float,
    s1: float,
    tol: float = 1e-10,
    max_iter: int = 30,
    schedule=None,
    method=StepMethod.RK4,
) -> ShootResult:
    """Secant iteration on ``s -> boundary_residual(s)``.

    Raises :class:`ShootingNotConverged` (carrying the best iterate) after
    ``max_iter`` updates and :class:`StalledSecant` when two residuals coincide.
    """
    if s0 == s1:
        raise ValueError("secant needs two distinct starting slopes")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if schedule is None:
        schedule = Uniform((bvp.t_right - bvp.t_left) / 1000, bvp.t_right)
    nodes = bvp_grid(bvp, schedule)

    r0, traj0 = _shoot_once(bvp, s0, nodes, method)
    best = ShootResult(s0, traj0, r0, 0)
    if abs(r0) <= tol:
        return best
    r1, traj1 = _shoot_once(bvp, s1, nodes, method)
    if abs(r1) < abs(best.residual):
        best = ShootResult(s1, traj1, r1, 0)
    if abs(r1) <= tol:
        return best

    for it in range(1, max_iter + 1):
        denom = r1 - r0
        if abs(denom) < 1e-14:
            best.iterations = it - 1
            best.converged = False
            raise StalledSecant(f"stalled secant: residuals {r0!r} and {r1!r} coincide", best)
        s2 = s1 - r1 * (s1 - s0) / denom
        r2, traj2 = _shoot_once(bvp, s2, nodes, method)
        if abs(r2) < abs(best.residual):
            best = ShootResult(s2, traj2, r2, it)
        if abs(r2) <= tol:
            return ShootResult(s2, traj2, r2, it)
        s0, r0, s1, r1 = s1, r1, s2, r2

    best.converged = False
    raise ShootingNotConverged(
        f"secant did not reach |residual| <= {tol:g} in {max_iter} iterations "
        f"(best slope {best.slope!r}, residual {best.residual:.3e})",
        best,
    )
