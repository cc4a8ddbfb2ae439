import json

import pytest

from mfcbf.cli import main
from mfcbf.logio import read_barrier_csv


AVOIDANCE = {
    "mode": "avoidance",
    "dynamics": {"model": "single_integrator", "spatial_dim": 2},
    "horizon": 0.05,
    "dt": 0.01,
    "kernel": {"family": "gaussian", "bandwidth": 1.0},
    "barrier": {"epsilon": 0.2},
    "adversary": {
        "kind": "constant_velocity",
        "velocity": [1.0, 0.0],
        "initial_positions": [[-4.0, 0.0]],
    },
    "initial": {"kind": "box", "low": [-1, -1], "high": [1, 1], "count": 3, "seed": 2},
    "output": {"wall_time": False},
}


def write_cfg(tmp_path, document, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(document))
    return path


def test_validate_ok(tmp_path, capsys):
    path = write_cfg(tmp_path, AVOIDANCE)
    assert main(["validate", str(path)]) == 0
    assert "OK" in capsys.readouterr().out


def test_validate_reports_all_errors(tmp_path, capsys):
    bad = json.loads(json.dumps(AVOIDANCE))
    bad["kernel"]["bandwidth"] = -1
    bad["barrier"]["epsilon"] = -1
    path = write_cfg(tmp_path, bad)
    assert main(["validate", str(path)]) == 2
    err = capsys.readouterr().err
    assert "kernel.bandwidth" in err and "barrier.epsilon" in err


def test_missing_file_is_validation_failure(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "nope.json")]) == 2


def test_run_writes_outputs(tmp_path, capsys):
    path = write_cfg(tmp_path, AVOIDANCE)
    out = tmp_path / "out"
    assert main(["run", str(path), "--out-dir", str(out)]) == 0
    assert (out / "trajectory.csv").exists()
    assert (out / "barrier.csv").exists()
    echo = json.loads((out / "config_echo.json").read_text())
    assert echo["mode"] == "avoidance"
    assert len(read_barrier_csv(out / "barrier.csv")) == 5
    assert "min H" in capsys.readouterr().out


def test_run_solver_failure_exits_3(tmp_path, capsys):
    doc = json.loads(json.dumps(AVOIDANCE))
    doc["mode"] = "baseline_pairwise"
    doc["pairwise"] = {"eps_safe": 2.0}
    doc["initial"] = {
        "kind": "explicit",
        "states": [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5]],
    }
    doc["solver"] = {"tolerance": 1e-8, "max_iterations": 1}
    path = write_cfg(tmp_path, doc)
    out = tmp_path / "out"
    assert main(["run", str(path), "--out-dir", str(out)]) == 3
    assert "failed" in capsys.readouterr().err


def test_bench_small_sizes(tmp_path, capsys):
    doc = json.loads(json.dumps(AVOIDANCE))
    doc["pairwise"] = {"eps_safe": 0.3}
    doc["bench"] = {"steps": 20, "budget_seconds": 60}
    path = write_cfg(tmp_path, doc)
    out = tmp_path / "out"
    assert main(["bench", str(path), "--sizes", "2,3", "--out-dir", str(out)]) == 0
    lines = (out / "benchmark.csv").read_text().splitlines()
    assert lines[0] == "n,mf_rows,baseline_rows,mf_step_ms,baseline_step_ms,mf_solve_iters,baseline_solve_iters"
    first = lines[1].split(",")
    assert first[0] == "2" and first[1] == "1" and first[2] == "1"
    second = lines[2].split(",")
    assert second[0] == "3" and second[1] == "1" and second[2] == "3"


def test_bench_rejects_bad_sizes(tmp_path, capsys):
    doc = json.loads(json.dumps(AVOIDANCE))
    doc["pairwise"] = {"eps_safe": 0.3}
    path = write_cfg(tmp_path, doc)
    assert main(["bench", str(path), "--sizes", "5,2"]) == 2
    assert main(["bench", str(path), "--sizes", "abc"]) == 2
