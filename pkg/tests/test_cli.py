import csv
import json
import subprocess
import sys

import pytest

from sagesim.cli import main
from sagesim.scenarios import homogeneous_doc


@pytest.fixture
def config_path(tmp_path):
    doc = homogeneous_doc(n=10, radius=0.5, attacked=2, iterations=60, trials=2, stride=20)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


def test_run_writes_outputs(tmp_path, config_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_path), "--out", str(out), "--trials", "3", "--seed", "9"]) == 0
    rows = list(csv.DictReader((out / "metrics.csv").open()))
    assert {r["trial"] for r in rows} == {"0", "1", "2"}
    assert {r["iter"] for r in rows} == {"0", "20", "40", "60"}
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["run"]["seed"] == 9
    assert "median final max RMSE" in capsys.readouterr().out


def test_run_is_byte_reproducible(tmp_path, config_path):
    for d in ("a", "b"):
        main(["run", "--config", str(config_path), "--out", str(tmp_path / d)])
    for f in ("metrics.csv", "summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_analyze(tmp_path, capsys):
    model = {"m_dim": 1, "agents": [{"rows": [[1.0]]}] * 5}
    attack = {"compromised_streams": [0, 1], "strategy": {"kind": "constant", "value": 3}}
    (tmp_path / "m.json").write_text(json.dumps(model))
    (tmp_path / "a.json").write_text(json.dumps(attack))
    code = main(["analyze", "--model", str(tmp_path / "m.json"), "--attack", str(tmp_path / "a.json"),
                 "--out", str(tmp_path / "r.json")])
    assert code == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["max_tolerable_s"] == 2
    assert report["report"]["strict_holds"] and report["report"]["margin_kappa"] == pytest.approx(1.0)
    assert json.loads(capsys.readouterr().out) == report


def test_analyze_all_streams(tmp_path, capsys):
    (tmp_path / "m.json").write_text(json.dumps({"m_dim": 1, "agents": [{"rows": [[1.0]]}] * 2}))
    (tmp_path / "a.json").write_text(json.dumps({"compromised_agents": [0, 1]}))
    assert main(["analyze", "--model", str(tmp_path / "m.json"), "--attack", str(tmp_path / "a.json")]) == 0
    assert json.loads(capsys.readouterr().out)["report"] is None


@pytest.mark.parametrize("param,values,key", [("gamma", ["1", "5"], "Gamma"), ("attack_count", ["0", "2"], "count")])
def test_sweep(tmp_path, config_path, param, values, key):
    out = tmp_path / "sw"
    assert main(["sweep", "--config", str(config_path), "--out", str(out), "--param", param,
                 "--values", *values]) == 0
    rows = list(csv.DictReader((out / f"sweep_{param}.csv").open()))
    assert len(rows) == 4 and {r[key] for r in rows} == {repr(float(v)) if key == "Gamma" else v for v in values}


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_console_entry_point(config_path, tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sagesim.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "analyze" in proc.stdout
