"""Euler and shooting solvers for second-order ODEs with a time singularity."""

from .ode_core import (
    BlowUpError, DomainError, DriftProblem, EvaluationError, LaneEmdenProblem, LinearProblem,
    SingularPointError, SolverError, State, Trajectory, eval_drift, eval_lane_emden_rhs,
)
from .steppers import (
    Geometric, StepMethod, Uniform, build_grid, forward_euler_step, integrate, refine_grid,
    rk4_step, semi_implicit_euler_step,
)

__version__ = "0.1.0"
