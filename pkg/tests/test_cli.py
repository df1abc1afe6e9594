import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from tailwave import cli, pipeline
from tailwave.config import parse_config
from tailwave.errors import QuadratureError

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
GOLDEN = Path(__file__).parent / "data" / "predict_reference.json"

SMALL = {
    "p": 3,
    "epsilon": 0.1,
    "profiles": {
        "f": {"family": "zero", "amplitude": 0.0},
        "g": {"family": "poly_bump", "amplitude": 1.0, "radius": 1.0, "m": 6},
    },
    "grid": {"N": 500, "cfl": 0.5},
    "t_final": 20.0,
    "observers": [0.5, 1.0],
}


def write_cfg(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def run(*args):
    return cli.main([str(a) for a in args])


# ---- predict


def test_predict_matches_golden(tmp_path):
    assert run("predict", "--config", CONFIGS / "reference.json", "--out", tmp_path) == 0
    assert (tmp_path / "prediction.json").read_text() == GOLDEN.read_text()


def test_golden_agrees_with_closed_form():
    # C_{3,0} = int (1-x^2)^12 dx / 4096 for the reference data
    gold = json.loads(GOLDEN.read_text())
    C30 = 2**25 * math.factorial(12) ** 2 / math.factorial(25) / 4096
    assert gold["C"][0] == pytest.approx(C30, rel=1e-10)
    assert gold["A"][0] == pytest.approx(2 * 0.05**3 * C30, rel=1e-10)


def test_predict_position_data_non_generic(tmp_path):
    data = dict(SMALL, profiles={"f": {"family": "poly_bump", "m": 4}, "g": {"family": "zero", "amplitude": 0.0}})
    assert run("predict", "--config", write_cfg(tmp_path, data), "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "prediction.json").read_text())
    assert rep["A"][0] == 0.0 and rep["nonGeneric"] is True


def test_predict_eps_doubled(tmp_path):
    a = pipeline.predict(parse_config(dict(SMALL, epsilon=0.05)))
    b = pipeline.predict(parse_config(dict(SMALL, epsilon=0.1)))
    for x, y in zip(a["A"], b["A"]):
        assert y == pytest.approx(8 * x, rel=1e-13, abs=0)


def test_quadrature_failure_exit_code(tmp_path, monkeypatch):
    def boom(cfg):
        raise QuadratureError("forced")

    monkeypatch.setattr(pipeline, "predict", boom)
    assert run("predict", "--config", write_cfg(tmp_path, SMALL), "--out", tmp_path) == 3


def test_config_error_exit_code(tmp_path):
    assert run("predict", "--config", write_cfg(tmp_path, {"p": 1}), "--out", tmp_path) == 2
    assert run("predict", "--config", tmp_path / "missing.json", "--out", tmp_path) == 2
    cfg = write_cfg(tmp_path, SMALL)
    assert run("evolve", "--config", cfg, "--out", tmp_path, "--resolution-factor", "0") == 2


# ---- evolve


def test_evolve_zero_epsilon(tmp_path):
    cfg = write_cfg(tmp_path, dict(SMALL, epsilon=0.0))
    assert run("evolve", "--config", cfg, "--out", tmp_path / "run") == 0
    for name in ("obs_r0.5.csv", "obs_r1.csv"):
        lines = (tmp_path / "run" / name).read_text().splitlines()
        assert lines[0] == "t,u"
        assert all(float(line.split(",")[1]) == 0.0 for line in lines[1:])
    meta = json.loads((tmp_path / "run" / "metadata.json").read_text())
    assert meta["scheme_order"] == 4 and "dr" in meta and "dt" in meta


def test_evolve_is_byte_identical(tmp_path):
    cfg = write_cfg(tmp_path, SMALL)
    run("evolve", "--config", cfg, "--out", tmp_path / "a")
    run("evolve", "--config", cfg, "--out", tmp_path / "b")
    for name in ("obs_r0.5.csv", "obs_r1.csv", "energy.csv", "metadata.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_evolve_convergence_report(tmp_path):
    cfg = write_cfg(tmp_path, SMALL)
    assert run("evolve", "--config", cfg, "--out", tmp_path, "--convergence") == 0
    rep = json.loads((tmp_path / "convergence.json").read_text())
    for order in rep["order"].values():
        assert order == pytest.approx(4.0, abs=0.5)
    assert (tmp_path / "res2" / "obs_r1.csv").exists()


def test_evolve_blowup_exit_code(tmp_path):
    data = dict(SMALL, epsilon=30.0, t_final=5.0)
    data["profiles"] = {"f": {"family": "zero", "amplitude": 0.0},
                        "g": {"family": "poly_bump", "amplitude": 1.0, "radius": 1.0, "m": 3}}
    assert run("evolve", "--config", write_cfg(tmp_path, data), "--out", tmp_path) == 4


# ---- analyze and verify


def test_analyze_existing_run(tmp_path):
    cfg = write_cfg(tmp_path, SMALL)
    run("evolve", "--config", cfg, "--out", tmp_path / "run")
    assert run("analyze", "--config", cfg, "--out", tmp_path, "--run", tmp_path / "run") == 0
    rep = json.loads((tmp_path / "analysis.json").read_text())
    assert set(rep["observers"]) == {"0.5", "1"}
    assert rep["observers"]["1"]["exponent"]["plateau"] == pytest.approx(-2.0, abs=0.2)


def test_verify_blowup_is_reported(tmp_path):
    data = json.loads((CONFIGS / "reference.json").read_text())
    data["epsilon"] = 30.0
    assert run("verify", "--config", write_cfg(tmp_path, data), "--out", tmp_path) == 4
    rep = json.loads((tmp_path / "verify.json").read_text())
    assert rep["status"] == "blowup" and rep["time"] > 0


def test_verify_reference_passes(tmp_path):
    assert run("verify", "--config", CONFIGS / "reference.json", "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "verify.json").read_text())
    assert rep["status"] == "pass"
    quantities = {row["quantity"] for row in rep["checks"]}
    assert {"exponent", "A0", "A1", "(a,b)", "approach rate", "energy drift"} <= quantities
    assert "PASS" in (tmp_path / "verify.txt").read_text()


def test_verify_non_generic_expectations(tmp_path):
    assert run("verify", "--config", CONFIGS / "nongeneric.json", "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "verify.json").read_text())
    assert rep["nonGeneric"] is True
    exps = [row for row in rep["checks"] if row["quantity"] == "exponent"]
    assert all(row["predicted"] == -3.0 for row in exps)
    assert not any(row["quantity"] == "(a,b)" for row in rep["checks"])


def test_verify_failing_check_exit_code(tmp_path):
    # an under-resolved, short run completes but cannot pass the checks
    data = dict(SMALL, t_final=12.0, grid={"N": 60})
    assert run("verify", "--config", write_cfg(tmp_path, data), "--out", tmp_path) == 1


# ---- sweep


def test_sweep_thread_cap_is_deterministic(tmp_path, monkeypatch):
    data = dict(SMALL, epsilon=[0.05, 0.1], grid={"N": 250}, t_final=20.0)
    data["sweep"] = {"resolutions": [1, 2, 4]}
    cfg = write_cfg(tmp_path, data)
    reports = []
    for threads in ("1", "3"):
        monkeypatch.setenv("TAILWAVE_THREADS", threads)
        out = tmp_path / f"t{threads}"
        assert run("sweep", "--config", cfg, "--out", out) == 0
        reports.append(json.loads((out / "sweep.json").read_text()))
    assert reports[0]["workers"] == 1 and reports[1]["workers"] == 3
    a, b = (dict(r, workers=None) for r in reports)
    assert a == b
    power = reports[0]["epsilon_scaling"][0]["observers"]["1"]["power"]
    assert power == pytest.approx(3.0, abs=0.15)
    assert (tmp_path / "t1" / "eps0.1_res4" / "obs_r1.csv").read_bytes() == \
        (tmp_path / "t3" / "eps0.1_res4" / "obs_r1.csv").read_bytes()


def test_worker_count(monkeypatch):
    monkeypatch.setenv("TAILWAVE_THREADS", "2")
    assert pipeline.worker_count(10) == 2
    assert pipeline.worker_count(1) == 1
    monkeypatch.setenv("TAILWAVE_THREADS", "lots")
    with pytest.warns(RuntimeWarning):
        assert pipeline.worker_count(1) == 1


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "tailwave.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("predict", "evolve", "analyze", "verify", "sweep"):
        assert cmd in out.stdout
