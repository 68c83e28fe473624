import json
import math
import subprocess
import sys

import pytest

from sok import cli
from sok.output import CsvTable, trajectory_from_table, trajectory_table


def run(argv, tmp_path, name="out"):
    path = tmp_path / name
    code = cli.main(argv + ["--out", str(path)])
    return code, (path.read_text() if path.exists() else None)


def usage_code(argv):
    try:
        return cli.main(argv)
    except SystemExit as exc:  # argparse-level errors
        return exc.code


def test_solve_table_recipe(tmp_path):
    code, text = run(["solve", "--problem", "example1", "--method", "semi-implicit-euler", "--h", "0.05",
                      "--end", "0.95"], tmp_path)
    assert code == 0
    traj = trajectory_from_table(CsvTable.loads(text))
    assert len(traj) == 20 and traj.x[2] == pytest.approx(0.2005, abs=5e-3)


def test_solve_lane_emden_json(tmp_path):
    code, text = run(["solve", "--problem", "lane-emden-n0", "--method", "rk4", "--h", "0.1", "--end", "1",
                      "--format", "json"], tmp_path)
    data = json.loads(text)
    assert code == 0 and data["x"][-1] == pytest.approx(5 / 6, abs=1e-8)
    assert data["truncated"] is False and data["schedule"] == {"kind": "uniform", "h": 0.1, "end": 1.0}


def test_solve_defaults_to_registry_schedule(tmp_path):
    code, text = run(["solve", "--problem", "example4"], tmp_path)
    traj = trajectory_from_table(CsvTable.loads(text))
    # forward Euler never evaluates the drift at t = 1 itself, so the full interval runs
    assert code == 0 and len(traj) == 101 and traj.t[1] == pytest.approx(0.01) and not traj.truncated


def test_solve_geometric(tmp_path):
    code, text = run(["solve", "--problem", "example4", "--schedule", "geometric", "--h-hat", "0.1",
                      "--delta", "0.1"], tmp_path)
    traj = trajectory_from_table(CsvTable.loads(text))
    assert code == 0 and traj.t[1] == pytest.approx(0.1 / 1.1) and 1 - traj.t[-1] <= 0.1


def test_solve_truncated_exit_code(tmp_path):
    code, text = run(["solve", "--problem", "example3", "--end", "2", "--cross-singularity"], tmp_path)
    table = CsvTable.loads(text)
    assert code == 2 and any(f.startswith("truncated: ") for f in table.footer)
    assert trajectory_from_table(table).truncated


@pytest.mark.parametrize("argv", [
    ["solve", "--problem", "example3", "--end", "2"],           # crosses t = 1 without override
    ["solve", "--problem", "nope"],
    ["solve", "--problem", "example4", "--end", "-1"],          # empty grid
    ["solve", "--problem", "lane-emden-n1", "--schedule", "geometric", "--h-hat", "0.1"],
    ["solve", "--problem", "example4", "--h", "-0.1"],
    ["solve", "--problem", "example4", "--method", "leapfrog"],
    ["converge", "--problem", "lane-emden-n1", "--h-list", "0.01"],
    ["reproduce", "table2"],
    ["frobnicate"],
])
def test_usage_errors(argv, tmp_path):
    assert usage_code(argv + ["--out", str(tmp_path / "x")] if argv != ["frobnicate"] else argv) == 64


def test_io_error(tmp_path):
    assert cli.main(["solve", "--problem", "example4", "--out", str(tmp_path / "missing" / "x.csv")]) == 74


def test_shoot_linear(tmp_path):
    code, text = run(["shoot", "--problem", "linear-sinh", "--h", "0.001", "--format", "json"], tmp_path)
    data = json.loads(text)
    assert code == 0 and data["slope"] == pytest.approx(1.0, abs=1e-9) and abs(data["residual"]) <= 1e-8


def test_shoot_round_trip_with_solve(tmp_path):
    _, text = run(["solve", "--problem", "example4", "--method", "rk4", "--h", "0.001", "--end", "0.9"], tmp_path)
    beta = trajectory_from_table(CsvTable.loads(text)).final.x
    code, text = run(["shoot", "--problem", "example4", "--h", "0.001", "--end", "0.9", "--beta", repr(beta),
                      "--format", "json"], tmp_path, "shoot")
    data = json.loads(text)
    assert code == 0 and data["slope"] == pytest.approx(1.0, abs=1e-6) and data["iterations"] <= 30


def test_shoot_degenerate(tmp_path):
    code, _ = run(["shoot", "--problem", "example5", "--method", "forward-euler", "--h", "0.5", "--end", "1",
                   "--beta", "1"], tmp_path)
    assert code == 3


def test_shoot_not_converged_emits_best(tmp_path):
    code, text = run(["shoot", "--problem", "example4", "--end", "0.9", "--beta", "0.5", "--max-iter", "1",
                      "--brackets", "0.1,3", "--format", "json"], tmp_path)
    data = json.loads(text)
    assert code == 3 and data["converged"] is False and math.isfinite(data["slope"])


def test_shoot_needs_beta(tmp_path):
    code, _ = run(["shoot", "--problem", "example4", "--end", "0.9"], tmp_path)
    assert code == 64


def test_converge_oracle(tmp_path):
    code, text = run(["converge", "--problem", "lane-emden-n1", "--method", "forward-euler", "--end", "1",
                      "--h-list", "0.02,0.01,0.005,0.0025", "--format", "json"], tmp_path)
    data = json.loads(text)
    assert code == 0 and 0.8 <= data["slope"] <= 1.2


def test_converge_geometric_with_envelope(tmp_path):
    code, text = run(["converge", "--problem", "example4", "--method", "forward-euler", "--schedule", "geometric",
                      "--h-list", "0.02,0.01,0.005"], tmp_path)
    table = CsvTable.loads(text)
    assert code == 0 and "envelope" in table.header
    err = table.header.index("max_sq_norm") if "max_sq_norm" in table.header else None
    env = table.header.index("envelope")
    if err is not None:
        assert all(row[err] <= row[env] for row in table.rows)


def test_reproduce_table(tmp_path):
    code, text = run(["reproduce", "table1"], tmp_path)
    table = CsvTable.loads(text)
    assert code == 0 and len(table.rows) == 10
    crit = table.header.index("in_criterion")
    xdev, vdev = table.header.index("x_abs_dev"), table.header.index("v_abs_dev")
    assert max(max(r[xdev], r[vdev]) for r in table.rows if r[crit] == 1) <= 5e-3


def test_reproduce_polytropes(tmp_path):
    code, text = run(["reproduce", "figure-polytropes", "--h", "0.01"], tmp_path)
    table = CsvTable.loads(text)
    assert code == 0 and table.header == ["t"] + [f"n{n}" for n in range(7)]
    t = [r[0] for r in table.rows]
    n1 = [r[2] for r in table.rows]
    i = next(k for k, x in enumerate(n1) if x <= 0)
    assert abs(t[i] - math.pi) <= 0.02
    assert all(r[6] > 0 for r in table.rows)  # n = 5 never reaches zero


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"problem": "lane-emden-n0", "method": "rk4", "h": 0.1, "end": 1.0}))
    _, a = run(["solve", "--config", str(cfg)], tmp_path, "a")
    _, b = run(["solve", "--config", str(cfg), "--end", "0.5"], tmp_path, "b")
    assert trajectory_from_table(CsvTable.loads(a)).t[-1] == 1.0
    assert trajectory_from_table(CsvTable.loads(b)).t[-1] == 0.5


@pytest.mark.parametrize("content", [
    {"problem": "example4", "colour": "red"},
    {"problem": "example4", "h": "small"},
    {"problem": "example4", "max_iter": 2.5},
    {"problem": ["example4"]},
])
def test_config_rejects_bad_settings(tmp_path, content):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps(content))
    assert cli.main(["solve", "--config", str(cfg)]) == 64


def test_config_must_be_json_object(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("[1, 2]")
    assert cli.main(["solve", "--config", str(cfg)]) == 64


def test_stdout_when_no_out(capsys):
    assert cli.main(["solve", "--problem", "lane-emden-n0", "--h", "0.5", "--end", "1"]) == 0
    assert capsys.readouterr().out.splitlines()[-1].startswith("1,")


def test_byte_identical_reruns(tmp_path):
    argv = ["converge", "--problem", "example4", "--method", "forward-euler", "--schedule", "geometric",
            "--h-list", "0.02,0.01,0.005"]
    _, a = run(argv, tmp_path, "a")
    _, b = run(argv, tmp_path, "b")
    assert a == b


def test_csv_round_trip(tmp_path):
    _, text = run(["solve", "--problem", "example2", "--method", "rk4"], tmp_path)
    table = CsvTable.loads(text)
    assert table.dumps() == text
    assert trajectory_table(trajectory_from_table(table), table.comments).dumps() == text


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sok", "solve", "--problem", "lane-emden-n0", "--h", "0.5",
                           "--end", "1"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("t,x,v\n")
    bad = subprocess.run([sys.executable, "-m", "sok", "solve", "--problem", "example3", "--end", "2",
                          "--cross-singularity"], capture_output=True, text=True)
    assert bad.returncode == 2
