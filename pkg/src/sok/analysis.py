"""Error measurement, empirical convergence order and the global error envelope.

The envelope follows the one-step energy estimate for forward Euler on a
geometric grid. With ``r = h_{n+1} / (t_s - t_{n+1})`` (equal to ``h_hat`` on
the geometric grid) and ``e_n^2 = eps_n^2 + eps'_n^2``::

    e_{n+1}^2 <= (1 + m1 r) e_n^2 + m2 r^3

and the discrete Gronwall lemma turns this into
``e_n^2 <= (exp(N m1 r) - 1) m2 r^2 / m1``. :func:`error_envelope` builds
``m1`` and ``m2`` term by term so every coefficient can be audited.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .ode_core import DriftProblem, Trajectory
from .steppers import Geometric, StepMethod, Uniform, build_grid, integrate, refine_grid


@dataclass
class ErrorReport:
    t: np.ndarray
    err_x: np.ndarray
    err_v: np.ndarray
    step: float | None = None

    @property
    def norms(self) -> np.ndarray:
        return np.hypot(self.err_x, self.err_v)

    @property
    def max_norm(self) -> float:
        return float(self.norms.max())

    @property
    def max_sq_norm(self) -> float:
        return float(np.max(self.err_x**2 + self.err_v**2))


def error_against(traj: Trajectory, reference, step: float | None = None) -> ErrorReport:
    """Nodewise errors ``x_n - y_n`` and ``x'_n - y'_n`` of ``traj``.

    ``reference`` is an exact solution (anything with ``x(t)``/``dx(t)``) or a
    :class:`Trajectory` on the same nodes.
    """
    if isinstance(reference, Trajectory):
        if len(reference) != len(traj) or not np.allclose(reference.t, traj.t, rtol=1e-12, atol=1e-14):
            raise ValueError("reference trajectory must share the nodes of the checked trajectory")
        rx, rv = reference.x, reference.v
    else:
        rx = np.broadcast_to(np.asarray(reference.x(traj.t), dtype=float), traj.t.shape)
        rv = np.broadcast_to(np.asarray(reference.dx(traj.t), dtype=float), traj.t.shape)
    bad = ~(np.isfinite(rx) & np.isfinite(rv))
    if bad.any():
        raise ValueError(f"reference undefined at t={traj.t[np.argmax(bad)]}")
    return ErrorReport(traj.t.copy(), rx - traj.x, rv - traj.v, step)


@dataclass
class OrderEstimate:
    steps: np.ndarray
    max_norms: np.ndarray
    slope: float
    intercept: float
    fit_residual: float
    reports: list[ErrorReport] = field(default_factory=list)
    excluded: list[float] = field(default_factory=list)

    @property
    def ratios(self) -> np.ndarray:
        """Error reduction factor between consecutive (decreasing) steps."""
        order = np.argsort(self.steps)[::-1]
        e = self.max_norms[order]
        return e[:-1] / e[1:]


def fit_order(steps, errors) -> tuple[float, float, float]:
    """Least-squares slope of ``log(error)`` against ``log(step)``; returns slope, intercept, rms residual."""
    lh = np.log(np.asarray(steps, dtype=float))
    le = np.log(np.asarray(errors, dtype=float))
    slope, intercept = np.polyfit(lh, le, 1)
    resid = le - (slope * lh + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid**2)))


def _grid_for(entry, kind, step, delta, end):
    if kind == "uniform":
        return build_grid(Uniform(step, entry.end if end is None else end), entry.problem, start=entry.initial.t)
    if kind == "geometric":
        return build_grid(Geometric(step, delta), entry.problem, start=entry.initial.t)
    raise ValueError(f"unknown schedule kind {kind!r}")


def empirical_order(
    entry,
    method: StepMethod | str,
    steps,
    reference: str = "oracle",
    schedule: str = "uniform",
    delta: float = 0.1,
    end: float | None = None,
    refine: int = 32,
) -> OrderEstimate:
    """Fit the convergence order of ``method`` on a registry entry.

    ``steps`` are uniform ``h`` values or geometric ``h_hat`` values.
    ``reference`` selects the ground truth at the nodes of each run:
    ``"oracle"`` (closed form), ``"rk4-fine"`` (RK4 on each grid refined
    ``refine``-fold) or ``"self-fine"`` (the method itself at ``refine``
    times the finest requested resolution).
    """
    steps = np.asarray(sorted(set(float(h) for h in steps), reverse=True))
    if steps.size < 3:
        raise ValueError("need at least 3 distinct step sizes")
    if np.any(steps <= 0):
        raise ValueError("step sizes must be positive")
    if steps[0] / steps[-1] < 4 - 1e-12:
        raise ValueError("step sizes must span at least a factor of 4")
    if reference == "oracle" and entry.oracle is None:
        raise ValueError(f"{entry.id} has no closed-form oracle; use reference='rk4-fine'")

    used, errs, reports, excluded = [], [], [], []
    for h in steps:
        nodes = _grid_for(entry, schedule, h, delta, end)
        traj = integrate(entry.problem, entry.initial, nodes, method)
        if traj.truncated:
            warnings.warn(f"run with step {h:g} truncated ({traj.reason}); excluded", RuntimeWarning, stacklevel=2)
            excluded.append(float(h))
            continue
        if reference == "oracle":
            ref = entry.oracle
        else:
            if reference == "rk4-fine":
                fine, ref_method, k = None, StepMethod.RK4, refine
            elif reference == "self-fine":
                fine, ref_method, k = None, method, refine * max(1, round(h / steps[-1]))
            else:
                raise ValueError(f"unknown reference {reference!r}")
            fine = integrate(entry.problem, entry.initial, refine_grid(nodes, k), ref_method)
            if fine.truncated:
                warnings.warn(f"reference for step {h:g} truncated; excluded", RuntimeWarning, stacklevel=2)
                excluded.append(float(h))
                continue
            ref = Trajectory(fine.t[::k], fine.x[::k], fine.v[::k])
        rep = error_against(traj, ref, step=float(h))
        used.append(float(h))
        errs.append(rep.max_norm)
        reports.append(rep)
    if len(used) < 3:
        raise ValueError(f"only {len(used)} valid runs; need at least 3")
    slope, intercept, resid = fit_order(used, errs)
    return OrderEstimate(np.array(used), np.array(errs), slope, intercept, resid, reports, excluded)


# -- discrete Gronwall machinery -------------------------------------------------

def gronwall_bound(M1: float, M2: float, a0: float, N: int) -> float:
    """Upper bound ``e^{(N+1) M1} (M2/M1 + a0) - M2/M1`` for ``a_{k+1} <= (1+M1) a_k + M2``.

    Evaluated as ``a0 e^{(N+1)M1} + M2 expm1((N+1)M1)/M1`` so that ``M1 -> 0``
    reduces smoothly to ``a0 + (N+1) M2``. The bound is only guaranteed for
    ``M1 >= 0``; for ``-1 <= M1 < 0`` the formula is returned as stated but
    can undercut the recurrence.
    """
    if M1 < -1:
        raise ValueError(f"M1 must be >= -1, got {M1}")
    if M2 < 0 or a0 < 0:
        raise ValueError("M2 and a0 must be nonnegative")
    k = (N + 1) * M1
    if M1 == 0:
        return a0 + (N + 1) * M2
    # divide first: M2 * expm1(k) underflows for tiny M1, M2
    return a0 * math.exp(k) + M2 * (math.expm1(k) / M1)


def check_exponential_lemma(x: float, m: float, rel_slack: float = 1e-12) -> bool:
    """Whether ``0 <= (1+x)^m <= e^{mx}`` holds numerically."""
    if x < -1:
        raise ValueError(f"x must be >= -1, got {x}")
    if not m > 0:
        raise ValueError(f"m must be > 0, got {m}")
    lhs = (1.0 + x) ** m
    return 0.0 <= lhs <= math.exp(m * x) * (1.0 + rel_slack)


# -- constants and the error envelope --------------------------------------------

@dataclass(frozen=True)
class LipschitzConstants:
    C0: float  # |a|
    C1: float  # |da/dt|
    C2: float  # |da/dx|
    C3: float  # |g|
    C4: float  # |dg/dt|
    C5: float  # |dg/dx|
    A1: float  # |x'| along the path
    T1: float  # Lipschitz constant of a in x
    T2: float  # Lipschitz constant of g in x
    span: float = 1.0  # t_s - t_0
    box: tuple[float, float, float, float] | None = None  # t_lo, t_hi, x_lo, x_hi

    def __post_init__(self):
        for name in ("C0", "C1", "C2", "C3", "C4", "C5", "A1", "T1", "T2"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative")


def _sample(fn, T, X, name):
    try:
        out = np.asarray(fn(T, X), dtype=float)
    except (TypeError, ValueError):
        out = np.vectorize(lambda t, x: float(fn(t, x)))(T, X)
    out = np.broadcast_to(out, T.shape)
    bad = ~np.isfinite(out)
    if bad.any():
        i = np.unravel_index(np.argmax(bad), T.shape)
        raise ValueError(f"{name} not finite at (t={T[i]}, x={X[i]})")
    return out


def estimate_constants(
    problem: DriftProblem, trajectory: Trajectory, padding: float = 0.1, samples: int = 201
) -> LipschitzConstants:
    """Sample ``a``, ``g`` and centred finite-difference partials over the trajectory's box.

    The box is ``[t_0, max t] x [min x - pad, max x + pad]`` with ``pad`` a
    fraction ``padding`` of the x-range. ``A1`` is the largest ``|x'|`` on the
    trajectory and the Lipschitz constants are taken equal to the partial bounds.
    """
    if padding < 0:
        raise ValueError("padding must be nonnegative")
    t_lo, t_hi = float(trajectory.t.min()), float(trajectory.t.max())
    x_lo, x_hi = float(trajectory.x.min()), float(trajectory.x.max())
    x_range = x_hi - x_lo
    pad = padding * (x_range if x_range > 0 else max(1.0, abs(x_hi)))
    x_lo, x_hi = x_lo - pad, x_hi + pad
    ts = np.linspace(t_lo, t_hi, samples if t_hi > t_lo else 1)
    xs = np.linspace(x_lo, x_hi, samples if x_hi > x_lo else 1)
    T, X = np.meshgrid(ts, xs, indexing="ij")
    dt = 1e-6 * ((t_hi - t_lo) or 1.0)
    dx = 1e-6 * ((x_hi - x_lo) or 1.0)

    def partials(fn, name):
        val = _sample(fn, T, X, name)
        d_t = (_sample(fn, T + dt, X, name) - _sample(fn, T - dt, X, name)) / (2 * dt)
        d_x = (_sample(fn, T, X + dx, name) - _sample(fn, T, X - dx, name)) / (2 * dx)
        return float(np.abs(val).max()), float(np.abs(d_t).max()), float(np.abs(d_x).max())

    C0, C1, C2 = partials(problem.a, "a")
    C3, C4, C5 = partials(problem.g, "g")
    return LipschitzConstants(
        C0, C1, C2, C3, C4, C5,
        A1=float(np.abs(trajectory.v).max()), T1=C2, T2=C5,
        span=float(problem.singular_point - problem.domain_start),
        box=(t_lo, t_hi, x_lo, x_hi),
    )


@dataclass(frozen=True)
class Envelope:
    value: float
    h_hat: float
    delta: float
    N: int
    D1: float
    D2: float
    m1: float
    m2: float
    M1: float
    M2: float
    needs_unit_error: bool  # cubic terms were absorbed assuming ||eps_n|| <= 1

    def __float__(self) -> float:
        return self.value

    def describe(self) -> list[str]:
        return [
            f"h_hat={self.h_hat:g} delta={self.delta:g} N={self.N}",
            f"D1={self.D1:.6g} D2={self.D2:.6g}",
            f"m1={self.m1:.6g} m2={self.m2:.6g}",
            f"M1=m1*h_hat={self.M1:.6g} M2=m2*h_hat^3={self.M2:.6g}",
            f"envelope=(exp(N*M1)-1)*M2/M1={self.value:.6g}",
            "cubic error terms absorbed with ||eps|| <= 1" if self.needs_unit_error else "no a-priori error bound used",
        ]


def truncation_constants(c: LipschitzConstants) -> tuple[float, float]:
    """``D1``, ``D2`` with ``L1^2 <= D1 h^4/(t_s-t)^4`` and ``L2^2 <= D2 h^4/(t_s-t)^2``."""
    # terms of d/dt a_hat along a solution, each bounded by c_k / (t_s - t)^2
    terms = (
        c.C1 * c.A1,         # a_t x' / (t_s - t)
        c.C0 * c.A1,         # a x' / (t_s - t)^2
        c.C4,                # g_t
        c.C2 * c.A1**2,      # a_x x'^2 / (t_s - t)
        c.C5 * c.A1,         # g_x x'
        c.C0**2 * c.A1,      # a^2 x' / (t_s - t)^2
        c.C0 * c.C3,         # a g / (t_s - t)
    )
    D1 = len(terms) / 4.0 * sum(k * k for k in terms)
    D2 = (c.C0**2 * c.A1**2 + c.C3**2) / 2.0
    return D1, D2


def error_envelope(c: LipschitzConstants, h_hat: float, delta: float, N: int | None = None) -> Envelope:
    """Bound on ``max_n ||eps_n||^2`` for forward Euler on the geometric grid."""
    if not h_hat > 0:
        raise ValueError("h_hat must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if c.span > 1.0:
        # the 1/(t_s - t) <= 1/(t_s - t)^2 collapses need t_s - t <= 1
        raise ValueError(f"envelope assembly assumes t_s - t_0 <= 1, got {c.span}")
    if N is None:
        N = Geometric(h_hat, delta).step_count()
    r = h_hat
    D1, D2 = truncation_constants(c)
    linear = 3.0 + 2.0 * c.C0 + c.A1 * c.T1 + 2.0 * c.T1 + c.T2
    quadratic = 2.0 + 8.0 * c.C0**2 + 8.0 * (c.A1 * c.T1) ** 2 + 8.0 * c.T1**2 + 8.0 * c.T2**2
    m1 = linear + r * quadratic
    m2 = (D1 + D2) * (1.0 + 2.0 * r)
    M1 = m1 * r
    M2 = m2 * r**3
    if M2 == 0.0:
        value = 0.0
    else:
        try:
            value = M2 * (math.expm1(N * M1) / M1)
        except OverflowError:
            value = math.inf
    return Envelope(value, h_hat, delta, N, D1, D2, m1, m2, M1, M2, needs_unit_error=c.T1 > 0)
