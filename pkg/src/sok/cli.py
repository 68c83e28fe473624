"""Command-line entry point: ``sok {solve,shoot,converge,reproduce}``.

Exit codes: 0 ok, 2 truncated run, 3 non-convergence, 64 usage, 74 I/O.
Verbosity comes from the ``SOK_LOG`` environment variable (e.g. ``INFO``).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import analysis, experiments, output
from .ode_core import DriftProblem, State
from .problems import get_problem, problem_ids
from .shooting import (
    BvpSpec, DegenerateFundamentalSolution, ShootingNotConverged, TrajectoryEscaped,
    shoot_linear, shoot_secant,
)
from .steppers import Geometric, StepMethod, Uniform, build_grid, integrate, refine_grid

EXIT_OK, EXIT_TRUNCATED, EXIT_NOT_CONVERGED, EXIT_USAGE, EXIT_IO = 0, 2, 3, 64, 74

log = logging.getLogger("sok")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    problem: str | None = None
    method: str | None = None
    schedule: str = "uniform"
    h: float | None = None
    h_hat: float | None = None
    delta: float = 0.1
    end: float | None = None
    x0: float | None = None
    v0: float | None = None
    out: str | None = None
    format: str = "csv"
    beta: float | None = None
    brackets: str | None = None
    tol: float = 1e-10
    max_iter: int = 30
    h_list: str | None = None
    reference: str | None = None
    cross_singularity: bool = False
    target: str | None = None

    def validate(self) -> "RunConfig":
        if self.schedule not in ("uniform", "geometric"):
            raise UsageError(f"schedule must be 'uniform' or 'geometric', got {self.schedule!r}")
        if self.format not in ("csv", "json"):
            raise UsageError(f"format must be 'csv' or 'json', got {self.format!r}")
        if self.method is not None:
            try:
                StepMethod(self.method)
            except ValueError:
                raise UsageError(f"unknown method {self.method!r}; one of {[m.value for m in StepMethod]}") from None
        for name in ("h", "h_hat", "tol"):
            val = getattr(self, name)
            if val is not None and not (val > 0 and math.isfinite(val)):
                raise UsageError(f"{name} must be positive, got {val}")
        if not 0 < self.delta < 1:
            raise UsageError(f"delta must lie in (0, 1), got {self.delta}")
        if self.max_iter < 1:
            raise UsageError("max_iter must be >= 1")
        return self


_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def load_config(path: str) -> dict:
    """Flat JSON object of scalar settings; keys are the long flag names with ``_`` for ``-``."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a flat JSON object")
    unknown = sorted(set(data) - set(_TYPES))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    for key, val in data.items():
        if isinstance(val, (dict, list)):
            raise UsageError(f"config key {key!r} must be a scalar")
        want = _TYPES[key]
        if "bool" in want and not isinstance(val, bool):
            raise UsageError(f"config key {key!r} must be a boolean")
        if ("float" in want or "int" in want) and (isinstance(val, bool) or not isinstance(val, (int, float))):
            raise UsageError(f"config key {key!r} must be a number")
        if want == "int" and (isinstance(val, bool) or not isinstance(val, int)):
            raise UsageError(f"config key {key!r} must be an integer")
        if want.startswith("str") and not isinstance(val, str):
            raise UsageError(f"config key {key!r} must be a string")
    return data


def _float_list(text: str, name: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{name} must be comma-separated numbers, got {text!r}") from None


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out is None or cfg.out == "-":
        sys.stdout.write(text)
        return
    with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _entry(cfg: RunConfig):
    if not cfg.problem:
        raise UsageError("--problem is required")
    try:
        return get_problem(cfg.problem)
    except (KeyError, ValueError):
        raise UsageError(f"unknown problem id {cfg.problem!r}; known: {', '.join(problem_ids())}") from None


def _initial(cfg: RunConfig, entry) -> State:
    s = entry.initial
    return State(s.t, s.x if cfg.x0 is None else cfg.x0, s.v if cfg.v0 is None else cfg.v0)


def _schedule(cfg: RunConfig, entry):
    if cfg.schedule == "geometric":
        if cfg.h_hat is None:
            raise UsageError("geometric schedule needs --h-hat")
        if not math.isfinite(entry.problem.singular_point):
            raise UsageError(f"{entry.id} has no right-endpoint singularity; geometric schedule undefined")
        return Geometric(cfg.h_hat, cfg.delta)
    end = entry.end if cfg.end is None else cfg.end
    ts = entry.problem.singular_point
    if end > ts and not cfg.cross_singularity:
        raise UsageError(
            f"end={end} lies beyond the singular point t={ts:g}; pass --cross-singularity to attempt it"
        )
    try:
        sched = Uniform(entry.h if cfg.h is None else cfg.h, end)
        build_grid(sched, entry.problem, start=entry.initial.t)
    except ValueError as exc:
        raise UsageError(f"empty or invalid grid: {exc}") from None
    return sched


def _schedule_dict(sched) -> dict:
    if isinstance(sched, Uniform):
        return {"kind": "uniform", "h": sched.h, "end": sched.end}
    return {"kind": "geometric", "h_hat": sched.h_hat, "delta": sched.delta}


def cmd_solve(cfg: RunConfig) -> int:
    entry = _entry(cfg)
    method = StepMethod(cfg.method or StepMethod.FORWARD_EULER)
    sched = _schedule(cfg, entry)
    traj = integrate(entry.problem, _initial(cfg, entry), sched, method)
    if cfg.format == "csv":
        text = output.trajectory_table(traj).dumps()
    else:
        text = output.dumps_json({
            "command": "solve", "problem": entry.id, "method": method.value,
            "schedule": _schedule_dict(sched), **output.trajectory_dict(traj),
        })
    _emit(cfg, text)
    if traj.truncated:
        log.warning("run truncated: %s", traj.reason)
        return EXIT_TRUNCATED
    return EXIT_OK


def _shoot_text(cfg, entry, method, sched, result, note=None) -> str:
    meta = {
        "slope": result.slope, "residual": result.residual,
        "iterations": result.iterations, "converged": result.converged,
    }
    if cfg.format == "json":
        body = {"command": "shoot", "problem": entry.id, "method": method.value,
                "schedule": _schedule_dict(sched), **meta, "trajectory": output.trajectory_dict(result.trajectory)}
        if note:
            body["note"] = note
        return output.dumps_json(body)
    comments = [f"{k}={output.fmt(v) if not isinstance(v, (bool, int)) else v}" for k, v in meta.items()]
    if note:
        comments.append(note)
    return output.trajectory_table(result.trajectory, comments).dumps()


def cmd_shoot(cfg: RunConfig) -> int:
    entry = _entry(cfg)
    method = StepMethod(cfg.method or StepMethod.RK4)
    sched = _schedule(cfg, entry)
    beta = entry.beta if cfg.beta is None else cfg.beta
    if beta is None:
        raise UsageError(f"{entry.id} has no default right boundary value; pass --beta")
    t_right = sched.end if isinstance(sched, Uniform) else build_grid(sched, entry.problem)[-1]
    alpha = entry.initial.x if cfg.x0 is None else cfg.x0
    try:
        bvp = BvpSpec(entry.problem, entry.initial.t, t_right, alpha, beta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        if entry.is_linear:
            result = shoot_linear(bvp, sched, method)
        else:
            if cfg.brackets:
                br = _float_list(cfg.brackets, "brackets")
                if len(br) != 2 or br[0] == br[1]:
                    raise UsageError("--brackets needs two distinct slopes s0,s1")
            else:
                s_guess = entry.initial.v if cfg.v0 is None else cfg.v0
                br = [0.5 * s_guess, 1.5 * s_guess] if s_guess else [-1.0, 1.0]
            result = shoot_secant(bvp, br[0], br[1], cfg.tol, cfg.max_iter, sched, method)
    except ShootingNotConverged as exc:
        log.error("%s", exc)
        _emit(cfg, _shoot_text(cfg, entry, method, sched, exc.best, note=f"not converged: {exc}"))
        return EXIT_NOT_CONVERGED
    except DegenerateFundamentalSolution as exc:
        sys.stderr.write(f"sok: {exc}\n")
        return EXIT_NOT_CONVERGED
    except TrajectoryEscaped as exc:
        sys.stderr.write(f"sok: {exc} (slope {exc.slope!r})\n")
        return EXIT_NOT_CONVERGED
    _emit(cfg, _shoot_text(cfg, entry, method, sched, result))
    return EXIT_OK


def _envelopes(entry, steps, delta, refine=32):
    """Envelope per step from constants estimated on a fine RK4 reference, or ``None``."""
    if not isinstance(entry.problem, DriftProblem):
        return None
    # the coarsest geometric grid ends furthest right, so its box covers every run
    nodes = build_grid(Geometric(max(steps), delta), entry.problem, start=entry.initial.t)
    fine = integrate(entry.problem, entry.initial, refine_grid(nodes, refine), StepMethod.RK4)
    if fine.truncated:
        return None
    try:
        consts = analysis.estimate_constants(entry.problem, fine, padding=0.25)
        return {h: analysis.error_envelope(consts, h, delta) for h in steps}
    except ValueError as exc:
        log.info("constants not estimable: %s", exc)
        return None


def cmd_converge(cfg: RunConfig) -> int:
    entry = _entry(cfg)
    method = StepMethod(cfg.method or StepMethod.FORWARD_EULER)
    if not cfg.h_list:
        raise UsageError("--h-list is required")
    steps = _float_list(cfg.h_list, "h-list")
    if len(set(steps)) < 3:
        raise UsageError("--h-list needs at least 3 distinct step sizes")
    reference = cfg.reference or ("oracle" if entry.oracle is not None else "rk4-fine")
    if reference not in ("oracle", "rk4-fine", "self-fine"):
        raise UsageError(f"unknown reference {reference!r}")
    if reference == "oracle" and entry.oracle is None:
        raise UsageError(f"{entry.id} has no closed-form oracle; use --reference rk4-fine")
    if cfg.schedule == "uniform":
        _schedule(cfg, entry)
    try:
        est = analysis.empirical_order(
            entry, method, steps, reference=reference, schedule=cfg.schedule, delta=cfg.delta, end=cfg.end
        )
    except ValueError as exc:
        if "valid runs" in str(exc):
            sys.stderr.write(f"sok: {exc}\n")
            return EXIT_TRUNCATED
        raise UsageError(str(exc)) from None
    env = None
    if cfg.schedule == "geometric" and method is StepMethod.FORWARD_EULER:
        env = _envelopes(entry, list(est.steps), cfg.delta)

    notes = [
        f"problem={entry.id} method={method.value} schedule={cfg.schedule} reference={reference}",
        f"slope={output.fmt(est.slope)} fit_residual={output.fmt(est.fit_residual)}",
        "ratios=" + ";".join(output.fmt(r) for r in est.ratios),
    ]
    if est.excluded:
        notes.append("excluded=" + ";".join(output.fmt(h) for h in est.excluded))
    if cfg.schedule == "geometric":
        notes.append("step count N = ceil(ln(1/delta)/ln(1+h_hat)) from the node rule")
    if cfg.format == "csv":
        header = ["step", "max_norm", "max_sq_norm"] + (["envelope"] if env else [])
        rows = []
        for h, rep in zip(est.steps, est.reports):
            row = [h, rep.max_norm, rep.max_sq_norm]
            if env:
                row.append(env[h].value)
            rows.append(row)
        text = output.CsvTable(header, rows, notes).dumps()
    else:
        runs = []
        for h, rep in zip(est.steps, est.reports):
            run = {"step": h, "max_norm": rep.max_norm, "max_sq_norm": rep.max_sq_norm}
            if env:
                run["envelope"] = env[h].value
                run["envelope_terms"] = env[h].describe()
            runs.append(run)
        text = output.dumps_json({
            "command": "converge", "problem": entry.id, "method": method.value, "schedule": cfg.schedule,
            "reference": reference, "slope": est.slope, "intercept": est.intercept,
            "fit_residual": est.fit_residual, "ratios": est.ratios.tolist(), "excluded": est.excluded,
            "runs": runs,
        })
    _emit(cfg, text)
    return EXIT_OK


def cmd_reproduce(cfg: RunConfig) -> int:
    if cfg.target == "table1":
        rows = experiments.reproduce_table1()
        dev18 = experiments.max_deviation(rows)
        dev_all = experiments.max_deviation(rows, criterion_only=False)
        if cfg.format == "json":
            text = output.dumps_json({
                "command": "reproduce", "target": "table1", "recipe": experiments.TABLE1_RECIPE,
                "rows": [dataclasses.asdict(r) for r in rows],
                "max_abs_deviation_compared": dev18, "max_abs_deviation_all": dev_all,
            })
        else:
            text = output.CsvTable(
                ["t", "x_published", "x_computed", "x_abs_dev", "v_published", "v_computed", "v_abs_dev", "in_criterion"],
                [[r.t, r.x_published, r.x_computed, r.deviations[0], r.v_published, r.v_computed, r.deviations[1],
                  r.in_criterion] for r in rows],
                comments=[
                    "recipe: " + experiments.TABLE1_RECIPE,
                    "compared cells: x and v at t = 0.1 .. 0.9 (18 cells); the t = 1 row is listed "
                    "with in_criterion=0 since it sits on the singular node",
                ],
                footer=[f"max_abs_deviation_compared={output.fmt(dev18)}",
                        f"max_abs_deviation_all={output.fmt(dev_all)}"],
            ).dumps()
        _emit(cfg, text)
        return EXIT_OK
    if cfg.target == "figure-polytropes":
        h = cfg.h or 0.01
        t, curves = experiments.polytrope_curves(range(7), h=h, end=cfg.end or 8.0)
        if cfg.format == "json":
            text = output.dumps_json({"command": "reproduce", "target": "figure-polytropes", "h": h,
                                      "t": t.tolist(), "curves": {f"n{n}": c.tolist() for n, c in curves.items()}})
        else:
            text = output.CsvTable(
                ["t"] + [f"n{n}" for n in curves],
                [[ti] + [curves[n][i] for n in curves] for i, ti in enumerate(t)],
                comments=[f"Lane-Emden polytropes, rk4, uniform h={output.fmt(h)}"],
            ).dumps()
        _emit(cfg, text)
        return EXIT_OK
    raise UsageError(f"unknown reproduce target {cfg.target!r}; use table1 or figure-polytropes")


COMMANDS = {"solve": cmd_solve, "shoot": cmd_shoot, "converge": cmd_converge, "reproduce": cmd_reproduce}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat JSON file of settings; flags override it")
    common.add_argument("--problem", help="registry id, e.g. example1 or lane-emden-n1")
    common.add_argument("--method", choices=[m.value for m in StepMethod])
    common.add_argument("--schedule", choices=["uniform", "geometric"])
    common.add_argument("--h", type=float)
    common.add_argument("--h-hat", type=float)
    common.add_argument("--delta", type=float)
    common.add_argument("--end", type=float)
    common.add_argument("--x0", type=float)
    common.add_argument("--v0", type=float)
    common.add_argument("--out")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--cross-singularity", action="store_true", default=None,
                        help="allow --end beyond the singular point (the run truncates there)")

    parser = _Parser(prog="sok", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="integrate an initial value problem")
    shoot = sub.add_parser("shoot", parents=[common], help="solve a two-point boundary value problem")
    shoot.add_argument("--beta", type=float, help="right boundary value x(b)")
    shoot.add_argument("--brackets", help="secant starting slopes s0,s1")
    shoot.add_argument("--tol", type=float)
    shoot.add_argument("--max-iter", type=int)
    conv = sub.add_parser("converge", parents=[common], help="empirical convergence order")
    conv.add_argument("--h-list", help="comma-separated steps (h, or h_hat for --schedule geometric)")
    conv.add_argument("--reference", choices=["oracle", "rk4-fine", "self-fine"])
    rep = sub.add_parser("reproduce", parents=[common], help="reproduce the published table or figure data")
    rep.add_argument("target", help="table1 | figure-polytropes")
    return parser


def make_config(args: argparse.Namespace) -> RunConfig:
    settings = load_config(args.config) if getattr(args, "config", None) else {}
    for name in _TYPES:
        val = getattr(args, name, None)
        if val is not None:
            settings[name] = val
    return RunConfig(**settings).validate()


def main(argv=None) -> int:
    level = os.environ.get("SOK_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = make_config(args)
        with np.errstate(over="ignore", invalid="ignore"):
            return COMMANDS[args.command](cfg)
    except UsageError as exc:
        sys.stderr.write(f"sok: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"sok: I/O error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
