"""Polytrope curves for n = 0..6 and their first zeros."""

import argparse
import math

from sok.experiments import polytrope_curves
from sok.output import CsvTable
from sok.problems import NoZeroFound, first_zero
from sok.steppers import Uniform


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, default=0.01)
    ap.add_argument("--end", type=float, default=8.0)
    ap.add_argument("--csv", help="write the curves to this file")
    args = ap.parse_args()

    known = {0: math.sqrt(6), 1: math.pi}
    for n in range(7):
        try:
            z = first_zero(n, Uniform(args.h, 20.0))
            extra = f"  (closed form {known[n]:.6f})" if n in known else ""
            print(f"n={n}: first zero {z:.6f}{extra}")
        except NoZeroFound:
            print(f"n={n}: no zero on [0, 20]")

    if args.csv:
        t, curves = polytrope_curves(range(7), h=args.h, end=args.end)
        table = CsvTable(["t"] + [f"n{n}" for n in curves],
                         [[ti] + [curves[n][i] for n in curves] for i, ti in enumerate(t)])
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(table.dumps())
        print(f"curves written to {args.csv}")


if __name__ == "__main__":
    main()
