import csv
import json
import subprocess
import sys

import pytest

from diracens import __version__
from diracens.cli import main


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_solve_then_sde_check_roundtrip(tmp_path):
    assert run(tmp_path, "solve", "--model", "quartic", "--t2", "1", "--t4", "0.05") == 0
    sol = json.loads((tmp_path / "solution.json").read_text())
    assert sol["version"] == __version__
    assert sol["config"]["couplings"] == {"t2": "1", "t4": "1/20"}
    assert main(["sde-check", "--table", str(tmp_path / "solution.json"),
                 "--out", str(tmp_path / "chk")]) == 0
    rep = json.loads((tmp_path / "chk" / "sde_report.json").read_text())
    assert rep["report"]["passed"]


def test_formal_solution_roundtrip(tmp_path):
    assert run(tmp_path, "solve", "--model", "quartic", "--t2", "1", "--t4", "1",
               "--mode", "formal:3") == 0
    assert main(["sde-check", "--table", str(tmp_path / "solution.json"),
                 "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "sde_report.json").read_text())["report"]
    assert rep["exact"] and rep["max_abs_residual"] == 0


def test_tampered_table_fails_check(tmp_path):
    run(tmp_path, "solve", "--model", "single-quartic", "--t4", "-0.05")
    path = tmp_path / "solution.json"
    d = json.loads(path.read_text())
    rec = next(r for r in d["table"]["records"] if r["g"] == 0 and r["lengths"] == [4])
    rec["value"] *= 1.001
    path.write_text(json.dumps(d))
    assert main(["sde-check", "--table", str(path), "--out", str(tmp_path)]) == 4


def test_density_csv_has_documented_header(tmp_path):
    run(tmp_path, "solve", "--model", "gaussian")
    lines = (tmp_path / "density.csv").read_text().splitlines()
    head = json.loads(lines[0][2:])
    assert set(head["columns"]) == {"x", "rho"}
    assert lines[1] == "x,rho"


def test_phase_diagram_negative_grid(tmp_path):
    assert run(tmp_path, "phase-diagram", "--model", "quartic", "--t4-grid", "-0.08:1:12") == 0
    rows = list(csv.DictReader(l for l in (tmp_path / "phase_diagram.csv").read_text()
                               .splitlines() if not l.startswith("#")))
    assert len(rows) == 12
    last = rows[-1]
    assert float(last["t4"]) == 1.0 and float(last["t2_transition"]) == pytest.approx(-8)


def test_critical_and_match(tmp_path):
    assert run(tmp_path, "critical", "--model", "single-quartic", "--free", "t4", "--t4",
               "-0.07", "--match", "--check") == 0
    d = json.loads((tmp_path / "critical.json").read_text())
    assert d["matching"]["couplings"]["t2"] == pytest.approx(4 / 3, abs=1e-9)


def test_painleve_and_oracle(tmp_path):
    assert run(tmp_path, "painleve", "--order", "6", "--check") == 0
    assert run(tmp_path, "oracle", "--model", "single-quartic", "--t4", "1", "--order", "2") == 0
    d = json.loads((tmp_path / "oracle.json").read_text())
    assert [c["genus"]["0"] for c in d["coefficients"]] == ["1", "-2", "9"]


def test_free_energy_needs_formal(tmp_path):
    assert run(tmp_path, "free-energy", "--model", "single-quartic", "--t4", "1") == 2
    assert run(tmp_path, "free-energy", "--model", "single-quartic", "--t4", "1",
               "--mode", "formal:3") == 0


@pytest.mark.parametrize("args", [["solve", "--model", "nope"],
                                  ["solve", "--model", "quartic"],
                                  ["solve", "--mode", "formal"],
                                  ["solve", "--model", "quartic", "--t4", "x"],
                                  ["bogus"]])
def test_config_errors_exit_2(tmp_path, args):
    assert run(tmp_path, *args) == 2


def test_unknown_config_keys(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": "quartic", "sweeps_typo": 3}))
    assert run(tmp_path, "solve", "--config", str(cfg)) == 2
    cfg.write_text(json.dumps({"model": "quartic", "couplings": {"t2": 1, "t4": "1/20"}}))
    assert run(tmp_path, "solve", "--config", str(cfg)) == 0


def test_solver_failure_exit_3(tmp_path):
    assert run(tmp_path, "oracle", "--model", "quartic", "--t2", "-1", "--t4", "1") in (2, 3)
    assert run(tmp_path, "critical", "--model", "single-quartic", "--t4", "-0.5") == 3


def test_mc_small(tmp_path):
    assert run(tmp_path, "mc", "--model", "quartic", "--t2", "1", "--t4", "0.05", "--N", "8",
               "--sweeps", "1500", "--chains", "1", "--burn-in", "200") == 0
    d = json.loads((tmp_path / "mc.json").read_text())
    assert "comparison" in d and (tmp_path / "mc_hist_D.csv").exists()


def test_console_script(tmp_path):
    out = subprocess.run([sys.executable, "-m", "diracens.cli", "painleve", "--order", "2",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0 and "a_1 = -1/24" in out.stdout
