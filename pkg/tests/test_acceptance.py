"""Acceptance gate: each criterion at its stated tolerance, one PASS/FAIL line each.

Results are printed in the terminal summary (see conftest.py) and each test
also asserts, so a failing criterion fails the suite.
"""

import math

import numpy as np
from conftest import ACCEPTANCE
from sok import cli
from sok.analysis import (
    check_exponential_lemma,
    empirical_order,
    error_against,
    error_envelope,
    estimate_constants,
    gronwall_bound,
)
from sok.experiments import TABLE1_COMPARED, max_deviation, reproduce_table1
from sok.ode_core import LinearProblem, Trajectory
from sok.output import CsvTable
from sok.problems import LANE_EMDEN_ORACLES, first_zero, get_example, lane_emden
from sok.shooting import BvpSpec, shoot_linear, shoot_secant
from sok.steppers import Geometric, StepMethod, Uniform, build_grid, integrate, refine_grid


def record(name, ok, detail):
    ACCEPTANCE[name] = (bool(ok), detail)
    assert ok, f"{name}: {detail}"


def test_c1_table_reproduction():
    rows = reproduce_table1(StepMethod.SEMI_IMPLICIT_EULER)
    compared = [r for r in rows if r.in_criterion]
    assert sorted(r.t for r in compared) == list(TABLE1_COMPARED)
    assert 2 * len(compared) == 18
    dev = max_deviation(rows)
    record("1 table reproduction", dev <= 5e-3, f"max |dev| over 18 cells = {dev:.3g} (tol 5e-3)")


def test_c2_polytrope_oracles():
    h = 1e-3
    worst, zeros_ok, lines = 0.0, True, []
    for n, t_hi in {0: math.sqrt(6) - 0.1, 1: math.pi - 0.1, 5: 3.0}.items():
        entry = lane_emden(n)
        traj = integrate(entry.problem, entry.initial, Uniform(h, t_hi), StepMethod.RK4)
        assert not traj.truncated
        err = float(np.max(np.abs(traj.x - LANE_EMDEN_ORACLES[n].x(traj.t))))
        worst = max(worst, err)
        lines.append(f"n={n} err={err:.2g}")
    for n, zero in {0: math.sqrt(6), 1: math.pi}.items():
        off = abs(first_zero(n, Uniform(h, 10.0)) - zero)
        zeros_ok &= off <= 2 * h
        lines.append(f"zero n={n} off {off:.2g}")
    record("2 polytrope oracles", worst <= 1e-6 and zeros_ok, "; ".join(lines) + " (tol 1e-6, zeros 2h)")


def test_c3_global_order():
    le = empirical_order(lane_emden(1), StepMethod.FORWARD_EULER, [0.02, 0.01, 0.005, 0.0025], end=1.0)
    ex4 = empirical_order(
        get_example(4), StepMethod.FORWARD_EULER, [0.02, 0.01, 0.005, 0.0025],
        reference="rk4-fine", schedule="geometric", delta=0.1,
    )
    ratios = ex4.ratios
    ok = 0.8 <= le.slope <= 1.2 and len(ratios) == 3 and np.all((ratios >= 1.7) & (ratios <= 2.3))
    record("3 global order", ok, f"LE n=1 slope {le.slope:.4f}; example4 geometric ratios {np.round(ratios, 4).tolist()}")


def test_c4_gronwall_properties():
    rng = np.random.default_rng(20261016)
    worst = -np.inf
    for _ in range(1000):
        M1 = rng.uniform(0.0, 2.0)
        M2 = rng.uniform(0.0, 1.0)
        a0 = rng.uniform(0.0, 1.0)
        N = int(rng.integers(0, 51))
        a = a0
        for k in range(N + 1):
            bound = gronwall_bound(M1, M2, a0, k)
            worst = max(worst, (a - bound) / max(1.0, abs(bound)))
            a = (1 + M1) * a + M2
    xs = rng.uniform(-1.0, 10.0, 10_000)
    ms = 20.0 - rng.uniform(0.0, 20.0, 10_000)  # (0, 20]
    lemma_ok = all(check_exponential_lemma(float(x), float(m)) for x, m in zip(xs, ms))
    record("4 gronwall properties", worst <= 1e-12 and lemma_ok,
           f"worst relative excess {worst:.2g}; exponential lemma holds on 10^4 samples: {lemma_ok}")


def test_c5_envelope_dominance():
    entry = get_example(4)
    # the coarsest grid ends furthest right, so its reference spans every run's box
    ref_run = integrate(entry.problem, entry.initial, refine_grid(build_grid(Geometric(0.02, 0.1), entry.problem), 32),
                        StepMethod.RK4)
    consts = estimate_constants(entry.problem, ref_run, padding=0.25)
    lines, ok = [], True
    for h_hat in (0.02, 0.01, 0.005):
        nodes = build_grid(Geometric(h_hat, 0.1), entry.problem)
        euler = integrate(entry.problem, entry.initial, nodes, StepMethod.FORWARD_EULER)
        fine = integrate(entry.problem, entry.initial, refine_grid(nodes, 32), StepMethod.RK4)
        ref = Trajectory(fine.t[::32], fine.x[::32], fine.v[::32])
        measured = error_against(euler, ref).max_sq_norm
        t_lo, t_hi, x_lo, x_hi = consts.box
        inside = euler.x.min() >= x_lo and euler.x.max() <= x_hi and euler.t.max() <= t_hi
        env = error_envelope(consts, h_hat, 0.1, N=len(nodes) - 1)
        ok &= bool(inside and measured <= env.value and not euler.truncated)
        lines.append(f"h={h_hat}: {measured:.3g} <= {env.value:.3g}")
    record("5 envelope dominance", ok, "; ".join(lines))


def test_c6_shooting():
    sinh_bvp = BvpSpec(LinearProblem(p=lambda t: 0.0, q=lambda t: 1.0, r=lambda t: 0.0), 0.0, 1.0, 0.0, math.sinh(1))
    res = shoot_linear(sinh_bvp, Uniform(1e-3, 1.0), StepMethod.RK4)
    traj_err = float(np.max(np.abs(res.trajectory.x - np.sinh(res.trajectory.t))))

    entry = get_example(4)
    b = 0.9
    target = integrate(entry.problem, entry.initial, Uniform(1e-3, b), StepMethod.RK4).final
    bvp = BvpSpec(entry.problem, 0.0, b, 0.0, target.x)
    sec = shoot_secant(bvp, 0.5, 1.5, schedule=Uniform(1e-3, b), max_iter=30)
    slope_err = abs(sec.slope - entry.initial.v)
    ok = traj_err <= 1e-6 and abs(res.residual) <= 1e-8 and slope_err <= 1e-6 and sec.iterations <= 30
    record("6 shooting", ok, f"sinh err {traj_err:.2g}, residual {res.residual:.2g}; "
           f"example4 slope err {slope_err:.2g} in {sec.iterations} iterations")


COMMANDS = [
    ["solve", "--problem", "example1", "--method", "semi-implicit-euler", "--h", "0.05", "--end", "0.95"],
    ["solve", "--problem", "lane-emden-n1", "--method", "rk4", "--h", "0.01", "--end", "3", "--format", "json"],
    ["shoot", "--problem", "linear-sinh", "--h", "0.001", "--end", "1"],
    ["shoot", "--problem", "example4", "--h", "0.001", "--end", "0.9", "--beta", "0.5"],
    ["converge", "--problem", "lane-emden-n1", "--method", "forward-euler", "--end", "1",
     "--h-list", "0.02,0.01,0.005"],
    ["converge", "--problem", "example4", "--method", "forward-euler", "--schedule", "geometric",
     "--delta", "0.1", "--h-list", "0.02,0.01,0.005"],
    ["reproduce", "table1"],
    ["reproduce", "figure-polytropes", "--h", "0.05"],
]


def test_c7_determinism_and_format(tmp_path):
    ok, lines = True, []
    for i, argv in enumerate(COMMANDS):
        outs = []
        for rep in range(2):
            path = tmp_path / f"run{i}-{rep}.out"
            code = cli.main(argv + ["--out", str(path)])
            outs.append(path.read_bytes())
        same = outs[0] == outs[1] and len(outs[0]) > 0
        roundtrip = True
        if "json" not in argv:
            text = outs[0].decode()
            roundtrip = CsvTable.loads(text).dumps() == text
        ok &= same and roundtrip and code in (0, 2)
        if not (same and roundtrip):
            lines.append(f"{argv[:2]} identical={same} roundtrip={roundtrip}")
    record("7 determinism and format", ok, "; ".join(lines) or f"{len(COMMANDS)} commands byte-identical, CSV round-trips")
