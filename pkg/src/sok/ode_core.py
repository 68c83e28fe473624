"""Problem and solution data model for scalar second-order ODEs with a time singularity.

Three problem families share one duck-typed surface (``accel``, ``domain_start``,
``singular_point``, ``label``):

* :class:`DriftProblem` -- ``x'' = s_d * a(t,x)/(t_s - t) * x' + s_g * g(t,x)``,
  singular at the right endpoint ``t_s``.
* :class:`LaneEmdenProblem` -- ``x'' = -(2/t) x' - x**n``, singular at ``t = 0``.
* :class:`LinearProblem` -- ``x'' = p(t) x' + q(t) x + r(t)``, regular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple

import numpy as np

Field = Callable[[float, float], float]


class SolverError(Exception):
    """Base class for numerical failures raised by this package."""


class EvaluationError(SolverError, ValueError):
    """The right-hand side cannot be evaluated at the requested point."""


class SingularPointError(EvaluationError):
    pass


class DomainError(EvaluationError):
    pass


class BlowUpError(SolverError, ArithmeticError):
    """A step produced a non-finite state."""


class State(NamedTuple):
    t: float
    x: float
    v: float

    def is_finite(self) -> bool:
        return math.isfinite(self.t) and math.isfinite(self.x) and math.isfinite(self.v)


@dataclass(frozen=True)
class DriftProblem:
    a: Field
    g: Field
    drift_sign: int = -1
    singular_point: float = 1.0
    domain_start: float = 0.0
    label: str = "drift"
    # Multiplies g; -1 recovers the x'' + (...) = 0 reading of a displayed right-hand side.
    forcing_sign: int = 1

    def __post_init__(self):
        if self.drift_sign not in (1, -1) or self.forcing_sign not in (1, -1):
            raise ValueError("drift_sign and forcing_sign must be +1 or -1")
        if not self.domain_start < self.singular_point:
            raise ValueError(
                f"domain_start={self.domain_start} must lie left of singular_point={self.singular_point}"
            )

    def accel(self, t: float, x: float, v: float) -> float:
        return eval_drift(self, t, x, v)


@dataclass(frozen=True)
class LaneEmdenProblem:
    n: float
    label: str = field(default="")

    domain_start = 0.0
    singular_point = math.inf

    def __post_init__(self):
        if not (self.n >= 0 and math.isfinite(self.n)):
            raise ValueError(f"polytropic index must be finite and >= 0, got {self.n}")
        if not self.label:
            object.__setattr__(self, "label", f"lane-emden-n{self.n:g}")

    @property
    def integer_index(self) -> bool:
        return float(self.n).is_integer()

    def accel(self, t: float, x: float, v: float) -> float:
        return eval_lane_emden_rhs(self, t, x, v)


@dataclass(frozen=True)
class LinearProblem:
    """``x'' = p(t) x' + q(t) x + r(t)``."""

    p: Callable[[float], float]
    q: Callable[[float], float]
    r: Callable[[float], float]
    domain_start: float = 0.0
    label: str = "linear"

    singular_point = math.inf

    def accel(self, t: float, x: float, v: float) -> float:
        out = self.p(t) * v + self.q(t) * x + self.r(t)
        if not math.isfinite(out):
            raise DomainError(f"{self.label}: non-finite coefficient at t={t}")
        return out

    def homogeneous(self) -> "LinearProblem":
        return LinearProblem(self.p, self.q, lambda t: 0.0, self.domain_start, self.label + "-homogeneous")


def eval_drift(problem: DriftProblem, t: float, x: float, v: float) -> float:
    """Evaluate ``drift_sign * a/(t_s - t) * v + forcing_sign * g`` at one point.

    Raises :class:`SingularPointError` for ``t >= t_s`` and :class:`DomainError`
    when ``a`` or ``g`` is not finite there.
    """
    gap = problem.singular_point - t
    if gap <= 0.0:
        raise SingularPointError(
            f"{problem.label}: drift is singular at t={t} (singular point {problem.singular_point})"
        )
    if t < problem.domain_start:
        raise DomainError(f"{problem.label}: t={t} precedes domain start {problem.domain_start}")
    try:
        a = float(problem.a(t, x))
        g = float(problem.g(t, x))
    except OverflowError as exc:
        raise DomainError(f"{problem.label}: overflow evaluating a or g at (t={t}, x={x})") from exc
    if not (math.isfinite(a) and math.isfinite(g)):
        raise DomainError(f"{problem.label}: a={a}, g={g} not finite at (t={t}, x={x})")
    return problem.drift_sign * a / gap * v + problem.forcing_sign * g


def eval_lane_emden_rhs(problem: LaneEmdenProblem, t: float, x: float, v: float) -> float:
    """Right-hand side of the Lane-Emden equation, with the ``t = 0`` limit ``-x**n / 3``."""
    if t < 0:
        raise DomainError(f"{problem.label}: t={t} < 0")
    n = problem.n
    if x < 0 and not problem.integer_index:
        raise DomainError(f"{problem.label}: x={x} < 0 with non-integer index {n}")
    try:
        power = 1.0 if n == 0 else x**n
    except OverflowError as exc:
        raise DomainError(f"{problem.label}: overflow in x**n at x={x}") from exc
    if t == 0.0:
        return -power / 3.0
    return -(2.0 / t) * v - power


@dataclass
class Trajectory:
    """Node samples ``(t, x, v)``; ``truncated`` marks a run stopped before its grid ended."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    truncated: bool = False
    reason: str | None = None

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        self.x = np.asarray(self.x, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        if not (self.t.ndim == 1 and self.t.shape == self.x.shape == self.v.shape):
            raise ValueError("t, x, v must be 1-d arrays of equal length")
        if self.t.size == 0:
            raise ValueError("trajectory must be nonempty")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @classmethod
    def from_states(cls, states, truncated=False, reason=None) -> "Trajectory":
        arr = np.array([tuple(s) for s in states], dtype=np.float64).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], truncated, reason)

    def __len__(self) -> int:
        return self.t.size

    def __getitem__(self, i: int) -> State:
        return State(float(self.t[i]), float(self.x[i]), float(self.v[i]))

    def __iter__(self) -> Iterator[State]:
        for i in range(len(self)):
            yield self[i]

    @property
    def final(self) -> State:
        return self[-1]

    def superpose(self, other: "Trajectory", c: float) -> "Trajectory":
        """Nodewise ``self + c * other``; both trajectories must share nodes."""
        if len(self) != len(other) or not np.array_equal(self.t, other.t):
            raise ValueError("superposition needs trajectories on the same nodes")
        return Trajectory(self.t.copy(), self.x + c * other.x, self.v + c * other.v)
