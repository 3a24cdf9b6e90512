import csv
import dataclasses
import shutil
from pathlib import Path

import numpy as np
import pytest

from cfikit import cli
from cfikit.errors import SolverError

SPECS = Path(__file__).resolve().parent.parent / "examples_specs"


def _write(tmp_path, text, name="spec.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


UNIFORM = """application: screening
grid:
  n_cells: 100
distribution:
  kind: uniform
objective: revenue
"""


def test_run_uniform_writes_artifacts(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", _write(tmp_path, UNIFORM), "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "SUCCESS" in text
    for f in ("indirect_utility.csv", "allocation.csv", "transfers.csv", "run_report.txt"):
        assert (out / f).exists()
    assert (out / "cfi").is_dir() and (out / "measure").is_dir()


def test_round_trip_verify_certifies(tmp_path, capsys):
    spec = _write(tmp_path, UNIFORM)
    out = tmp_path / "out"
    assert cli.main(["run", spec, "--out", str(out)]) == 0
    assert cli.main(["verify", spec, str(out / "indirect_utility.csv")]) == 0
    assert "CERTIFIED" in capsys.readouterr().out


def test_verify_suboptimal_and_infeasible(tmp_path):
    spec = _write(tmp_path, UNIFORM)
    x = np.linspace(0.0, 1.0, 101)
    cand = tmp_path / "cand.csv"
    np.savetxt(cand, np.c_[x, np.maximum(0.0, x - 0.4)], delimiter=",", header="x,value", comments="")
    assert cli.main(["verify", spec, str(cand)]) == 1
    np.savetxt(cand, np.c_[x, 2 * x], delimiter=",", header="x,value", comments="")
    assert cli.main(["verify", spec, str(cand)]) == 2


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env_out"))
    assert cli.main(["run", _write(tmp_path, UNIFORM)]) == 0
    assert (tmp_path / "env_out" / "run_report.txt").exists()


def test_run_is_deterministic(tmp_path):
    spec = _write(tmp_path, UNIFORM)
    for d in ("a", "b"):
        assert cli.main(["run", spec, "--out", str(tmp_path / d), "--grid", "80"]) == 0
    for f in ("indirect_utility.csv", "allocation.csv", "transfers.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


@pytest.mark.parametrize("text, fragment", [
    ("application: screening\nobjective: revenue\n", "distribution"),
    ("application: nowhere\n", "application"),
    ("application: screening\ndistribution:\n  kind: uniform\n  bad: [1, 2\n", "line"),
    ("application: screening\ndistribution:\n  kind: weird\n", "kind"),
])
def test_spec_errors_exit_two(tmp_path, capsys, text, fragment):
    assert cli.main(["run", _write(tmp_path, text), "--out", str(tmp_path / "o")]) == 2
    assert fragment in capsys.readouterr().err


def test_bad_grid_flag(tmp_path):
    assert cli.main(["run", _write(tmp_path, UNIFORM), "--grid", "1", "--out", str(tmp_path / "o")]) == 2


def test_solver_failure_exit_three(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise SolverError("simulated")
    monkeypatch.setattr(cli, "solve_spec", boom)
    assert cli.main(["run", _write(tmp_path, UNIFORM), "--out", str(tmp_path / "o")]) == 3


def test_certification_failure_exit_four(tmp_path, monkeypatch):
    real = cli.solve_spec

    def uncertified(*a, **k):
        mech, raw, scan = real(*a, **k)
        return dataclasses.replace(mech, certified=False, oracle_gap=1.0), raw, scan
    monkeypatch.setattr(cli, "solve_spec", uncertified)
    spec = _write(tmp_path, UNIFORM)
    assert cli.main(["run", spec, "--out", str(tmp_path / "o")]) == 4
    assert cli.main(["run", spec, "--out", str(tmp_path / "o"), "--oracle", "off"]) == 4


def test_uncertified_but_lp_agrees_is_success(tmp_path, monkeypatch):
    real = cli.solve_spec

    def close(*a, **k):
        mech, raw, scan = real(*a, **k)
        return dataclasses.replace(mech, certified=False, oracle_gap=0.0), raw, scan
    monkeypatch.setattr(cli, "solve_spec", close)
    assert cli.main(["run", _write(tmp_path, UNIFORM), "--out", str(tmp_path / "o")]) == 0


def test_sweep_csv_and_monotone_flag(tmp_path, capsys):
    text = (SPECS / "contest_sweep.yaml").read_text().replace(
        "values: [0.0, 0.1, 0.2, 0.3, 0.35, 0.4, 0.45, 0.5]", "values: [0.0, 0.25, 0.5]")
    out = tmp_path / "sw"
    assert cli.main(["sweep", _write(tmp_path, text), "--out", str(out), "--grid", "100", "--jobs", "2"]) == 0
    with open(out / "sweep.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["param", "value", "cutoff", "objective"]
    assert len(rows) == 4
    cut = [float(r[2]) for r in rows[1:]]
    assert all(b <= a + 1e-12 for a, b in zip(cut, cut[1:]))
    assert "monotone (nonincreasing) = True" in capsys.readouterr().out
    assert (out / "sweep_report.txt").exists() and (out / "run_000").is_dir()


def test_sweep_empty_values(tmp_path):
    text = UNIFORM + "sweep:\n  param: distribution.kind\n  values: []\n"
    assert cli.main(["sweep", _write(tmp_path, text), "--out", str(tmp_path / "o")]) == 2


def test_raw_round_trip_and_grid_mismatch(tmp_path):
    spec = _write(tmp_path, UNIFORM)
    out = tmp_path / "out"
    assert cli.main(["run", spec, "--out", str(out)]) == 0
    raw = f"application: raw_cfi\ncfi:\n  dir: {out / 'cfi'}\nmeasure:\n  dir: {out / 'measure'}\n"
    raw_spec = _write(tmp_path, raw, "raw.yaml")
    assert cli.main(["run", raw_spec, "--out", str(tmp_path / "raw_out")]) == 0
    a = np.loadtxt(out / "indirect_utility.csv", delimiter=",", skiprows=1)
    b = np.loadtxt(tmp_path / "raw_out" / "indirect_utility.csv", delimiter=",", skiprows=1)
    assert np.allclose(a, b, atol=1e-12)
    assert cli.main(["run", raw_spec, "--grid", "50", "--out", str(tmp_path / "r2")]) == 2
    shutil.copytree(out / "measure", tmp_path / "m2")
    other = tmp_path / "other"
    assert cli.main(["run", spec, "--out", str(other), "--grid", "50"]) == 0
    bad = f"application: raw_cfi\ncfi:\n  dir: {out / 'cfi'}\nmeasure:\n  dir: {other / 'measure'}\n"
    assert cli.main(["run", _write(tmp_path, bad, "bad.yaml"), "--out", str(tmp_path / "r3")]) == 2


@pytest.mark.parametrize("name", sorted(p.name for p in SPECS.glob("*.yaml") if "sweep" not in p.name))
def test_example_specs_run(tmp_path, name):
    assert cli.main(["run", str(SPECS / name), "--out", str(tmp_path / "o"), "--grid", "100"]) == 0
