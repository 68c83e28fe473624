"""Print the worked-example table next to recomputed values for both Euler variants."""

import argparse

from sok.experiments import TABLE1_RECIPE, max_deviation, reproduce_table1
from sok.steppers import StepMethod


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--problem", default="example1", help="example1 or example1-displayed")
    args = ap.parse_args()

    print(f"recipe: {TABLE1_RECIPE}")
    for method in (StepMethod.SEMI_IMPLICIT_EULER, StepMethod.FORWARD_EULER):
        rows = reproduce_table1(method, problem_id=args.problem)
        print(f"\n{method.value} on {args.problem}")
        print(f"{'t':>4} {'x pub':>9} {'x calc':>11} {'v pub':>9} {'v calc':>11}")
        for r in rows:
            mark = "" if r.in_criterion else "  (not compared)"
            print(f"{r.t:4.1f} {r.x_published:9.5f} {r.x_computed:11.5f} {r.v_published:9.5f} {r.v_computed:11.5f}{mark}")
        print(f"max |dev| over compared cells: {max_deviation(rows):.3g}")


if __name__ == "__main__":
    main()
