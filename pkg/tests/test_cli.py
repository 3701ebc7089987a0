import json
import subprocess
import sys

import pytest

from solvcheck import data_path
from solvcheck.cli import main

TWO_BUS = str(data_path("two_bus.case"))
REACTIVE = str(data_path("two_bus_reactive.case"))
FEEDER = str(data_path("feeder56.case"))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def kv(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line)


def test_solve_two_bus(capsys):
    code, out, _ = run(capsys, "solve", "--case", TWO_BUS)
    assert code == 0
    summary = kv(out)
    assert summary["converged"] == "true"
    assert float(summary["residual"]) < 1e-8
    row = [line for line in out.splitlines() if line.startswith("1,")][0].split(",")
    assert row[3] == "0.887298" and row[4] == "0"


def test_sweep_two_bus(capsys, tmp_path):
    out_csv = tmp_path / "sweep.csv"
    code, out, _ = run(capsys, "sweep", "--case", TWO_BUS, "--step", "0.01", "--out", str(out_csv))
    assert code == 0
    assert kv(out)["lambda_critical"] == "2.5"
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "lambda,converged,c_min,c_argmin_bus,bolognani_ok,sigma_min"
    assert len(lines) == 1 + 251


def test_sweep_reactive(capsys):
    code, out, _ = run(capsys, "sweep", "--case", REACTIVE)
    assert code == 0
    assert kv(out)["lambda_critical"] == "5"
    assert kv(out)["lambda_bolognani"] == "2.5"


def test_verify_random(capsys):
    code, out, _ = run(capsys, "verify", "--case", "random", "--n", "6", "--trials", "100", "--seed", "7")
    assert code == 0
    assert out.startswith("theorem1 OK, lemma2 OK")


def test_index_and_fmatrix(capsys, tmp_path):
    code, out, _ = run(capsys, "index", "--case", TWO_BUS)
    assert code == 0
    assert kv(out)["c_min"] == "7.87298"
    f = tmp_path / "F.csv"
    assert run(capsys, "fmatrix", "--case", FEEDER, "--penetration", "10", "--out", str(f))[0] == 0
    lines = f.read_text().splitlines()
    assert len(lines) == 1 + 55 and len(lines[1].split(",")) == 55


def test_sensitivity(capsys):
    code, out, _ = run(capsys, "sensitivity", "--case", TWO_BUS, "--impedance-scale", "0.5")
    assert code == 0 and kv(out)["all_decreased"] == "true"
    code, _, err = run(capsys, "sensitivity", "--case", TWO_BUS)
    assert code == 2 and "exactly one" in err


def test_multiple_penetrations_parallel(capsys, tmp_path):
    out = tmp_path / "s.csv"
    argv = ["sweep", "--case", FEEDER, "--penetration", "10,100", "--step", "0.05", "--out", str(out)]
    code, serial, _ = run(capsys, *argv)
    assert code == 0
    code, parallel, _ = run(capsys, *argv, "--jobs", "2")
    assert code == 0
    assert serial == parallel
    assert (tmp_path / "s_p10.csv").exists() and (tmp_path / "s_p100.csv").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["bogus", "--case", TWO_BUS],
        ["solve"],
        ["solve", "--case", "random"],
        ["sweep", "--case", TWO_BUS, "--step", "0"],
        ["sweep", "--case", TWO_BUS, "--penetration", "-5"],
    ],
)
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == 2


def test_domain_errors(capsys, tmp_path):
    bad = tmp_path / "bad.case"
    bad.write_text("{not json")
    code, _, err = run(capsys, "solve", "--case", str(bad))
    assert code == 1 and "bad.case:1:" in err
    assert run(capsys, "solve", "--case", str(tmp_path / "missing.case"))[0] == 1


def test_insolvable_base_case_writes_nothing(capsys, tmp_path):
    doc = json.loads(data_path("two_bus.case").read_text())
    doc["buses"][1]["s_base"] = [-3.0, 0.0]
    case = tmp_path / "heavy.case"
    case.write_text(json.dumps(doc))
    out = tmp_path / "out.csv"
    code, _, err = run(capsys, "sweep", "--case", str(case), "--out", str(out))
    assert code == 1 and "no power-flow solution" in err
    assert not out.exists()
    assert run(capsys, "solve", "--case", str(case))[0] == 1


def test_deterministic_output(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "solvcheck.cli", "sweep", "--case", TWO_BUS, "--out", str(path)],
            capture_output=True, check=True,
        )
        outs.append((proc.stdout, path.read_bytes()))
    assert outs[0] == outs[1]
