import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from mildrfde import SchemaError, parse_problem
from mildrfde.cli import main
from mildrfde.problem import problem_from_dict

DEMOS = Path(__file__).resolve().parents[1] / "demos" / "problems"


def minimal(**overrides):
    spec = {
        "n": 1,
        "r": 1.0,
        "kernel": {"atoms": [{"theta": -1.0, "matrix": [[-0.5]]}]},
        "history": {"pieces": [{"interval": [-1.0, 0.0], "poly": [[1.0]]}], "valueAtZero": [1.0], "p": 1},
        "horizon": 2.0,
        "solver": {"h": 0.01},
    }
    spec.update(overrides)
    return spec


def write(tmp_path, spec, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(spec))
    return path


def test_parse_minimal_problem(tmp_path):
    spec = parse_problem(write(tmp_path, minimal()))
    assert spec.n == 1 and spec.horizon == 2.0 and spec.solver.h == 0.01
    assert np.allclose(spec.history.value_at_zero, [1.0])


def test_atom_outside_memory_names_the_field():
    bad = minimal(kernel={"atoms": [{"theta": 0.1, "matrix": [[1.0]]}]})
    with pytest.raises(SchemaError) as err:
        problem_from_dict(bad)
    assert "kernel.atoms[0].theta" in str(err.value)


def test_missing_value_at_zero_reported():
    bad = minimal()
    del bad["history"]["valueAtZero"]
    with pytest.raises(SchemaError) as err:
        problem_from_dict(bad)
    assert "history.valueAtZero required" in str(err.value)


def test_solve_csv_matches_closed_form(tmp_path):
    out = tmp_path / "out"
    assert main(["solve", "--spec", str(write(tmp_path, minimal())), "--out", str(out)]) == 0
    lines = (out / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,x_1"
    data = np.loadtxt(out / "trajectory.csv", delimiter=",", skiprows=1)
    t, x = data[:, 0], data[:, 1]
    assert np.all(np.diff(t) > 0)
    exact = np.where(t <= 1, 1 - 0.5 * t, 1 - 0.5 * t + 0.125 * (t - 1) ** 2)
    assert np.max(np.abs(x - exact)) < 1e-6
    assert (out / "forcing.csv").read_text().splitlines()[0] == "t,G_1,f_1"


def test_verify_passes_and_corruption_fails(tmp_path):
    spec = write(tmp_path, minimal())
    assert main(["verify", "--spec", str(spec), "--out", str(tmp_path / "ok")]) == 0
    report = json.loads((tmp_path / "ok" / "report.json").read_text())
    assert report["pass"] is True
    assert all(set(c) >= {"check", "anchor", "lhs", "rhs", "tol", "pass"} for c in report["checks"])
    assert main(["verify", "--spec", str(spec), "--out", str(tmp_path / "bad"), "--corrupt"]) == 1
    bad = json.loads((tmp_path / "bad" / "report.json").read_text())
    assert not bad["pass"]


def test_props_reports_are_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["props", "--seed", "7", "--trials", "5", "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_solve_is_deterministic(tmp_path):
    spec = write(tmp_path, minimal())
    for d in ("a", "b"):
        main(["solve", "--spec", str(spec), "--out", str(tmp_path / d)])
    for name in ("trajectory.csv", "forcing.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_input_errors_exit_two(tmp_path, capsys):
    out = str(tmp_path / "out")
    assert main(["solve", "--spec", str(tmp_path / "missing.json"), "--out", out]) == 2
    bad = write(tmp_path, minimal(horizon=-1.0), "bad.json")
    assert main(["verify", "--spec", str(bad), "--out", out]) == 2
    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    assert main(["solve", "--spec", str(junk), "--out", out]) == 2
    misaligned = write(tmp_path, minimal(solver={"h": 0.3}), "mis.json")
    assert main(["solve", "--spec", str(misaligned), "--out", out]) == 2
    assert main(["props", "--seed", "-1", "--trials", "3", "--out", out]) == 2
    assert "error" in capsys.readouterr().err


def test_tolerance_scale_env(tmp_path, monkeypatch):
    spec = write(tmp_path, minimal())
    monkeypatch.setenv("MILDRFDE_TOL_SCALE", "2.5")
    assert main(["verify", "--spec", str(spec), "--out", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "report.json").read_text())["tolScale"] == 2.5
    monkeypatch.setenv("MILDRFDE_TOL_SCALE", "-1")
    assert main(["verify", "--spec", str(spec), "--out", str(tmp_path / "o")]) == 2


def test_demo_problems_parse():
    for path in sorted(DEMOS.glob("*.json")):
        spec = parse_problem(path)
        assert spec.horizon > 0


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "mildrfde", "solve", "--spec", str(write(tmp_path, minimal())),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert (tmp_path / "o" / "trajectory.csv").exists()
