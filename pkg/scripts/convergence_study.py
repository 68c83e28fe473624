"""Convergence orders of the three steppers, and the squared-error envelope on the geometric grid."""

import argparse
import warnings

from sok.analysis import empirical_order, error_envelope, estimate_constants
from sok.problems import get_example, get_problem
from sok.steppers import Geometric, StepMethod, build_grid, integrate, refine_grid


def uniform_orders(steps):
    for pid, end in (("lane-emden-n1", 1.0), ("example5", None), ("linear-sinh", None)):
        entry = get_problem(pid)
        for method in StepMethod:
            est = empirical_order(entry, method, steps, end=end)
            print(f"{pid:14s} {method.value:20s} slope {est.slope:6.3f}  fit residual {est.fit_residual:.1e}")


def geometric_study(pid, steps, delta):
    entry = get_example(pid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        est = empirical_order(entry, StepMethod.FORWARD_EULER, steps, reference="rk4-fine",
                              schedule="geometric", delta=delta)
    fine = integrate(entry.problem, entry.initial,
                     refine_grid(build_grid(Geometric(max(steps), delta), entry.problem), 32), StepMethod.RK4)
    consts = estimate_constants(entry.problem, fine, padding=0.25)
    print(f"\n{pid}, forward Euler, geometric grid delta={delta}: slope {est.slope:.3f}")
    for h, rep in zip(est.steps, est.reports):
        env = error_envelope(consts, h, delta)
        flag = " (assumes ||eps|| <= 1)" if env.needs_unit_error else ""
        print(f"  h_hat={h:<7g} max ||eps||^2 = {rep.max_sq_norm:.4g}   envelope = {env.value:.4g}{flag}")
    if est.excluded:
        print(f"  excluded (truncated): {est.excluded}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", default="0.02,0.01,0.005,0.0025")
    ap.add_argument("--delta", type=float, default=0.1)
    args = ap.parse_args()
    steps = [float(s) for s in args.steps.split(",")]

    uniform_orders(steps)
    for pid in ("example1", "example3", "example4"):
        geometric_study(pid, steps, args.delta)


if __name__ == "__main__":
    main()
