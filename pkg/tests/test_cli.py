import json
import subprocess
import sys

import pytest

from fpp.cli import main
from fpp.harness import load_records

CFG = "n = 3000\nlambda = 2\ndist = gaussian(2,1)\nx_hi = 0.5\ntrials = 5\nmaster_seed = 1\n"


def test_constants_json(capsys):
    assert main(["constants", "--dist", "exponential(1)", "--lam", "2", "--format", "json"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["alpha"] == pytest.approx(1.0) and d["gamma"] == pytest.approx(2.0)


def test_simulate_and_compare(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(CFG + f"output = {tmp_path / 'r.csv'}\nplot_spec = true\n")
    assert main(["simulate", "--config", str(cfg), "--workers", "1"]) == 0
    recs = load_records(tmp_path / "r.csv")
    assert len(recs) == 5 and (tmp_path / "r.csv.plot.json").exists()
    assert main(["simulate", "--config", str(cfg), "--seed", "9", "--output", str(tmp_path / "s.csv"), "--workers", "1"]) == 0
    assert load_records(tmp_path / "s.csv") != recs

    wp = tmp_path / "w.txt"
    assert main(["brw", "--pairs", "--reps", "20", "--depth", "8", "--out", str(wp)]) == 0
    assert len(wp.read_text().splitlines()) == 20
    capsys.readouterr()
    assert main(["compare", "--records", str(tmp_path / "r.csv"), "--wpairs", str(wp), "--x-hi", "0.5"]) == 0
    out = capsys.readouterr().out
    assert "unverified dropped" in out and "unverified as holds" in out


def test_invalid_config_exit_code(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n = 100\nlambda = 2\n")
    assert main(["simulate", "--config", str(cfg)]) == 2
    assert main(["simulate", "--config", str(tmp_path / "absent.cfg")]) == 2


def test_budget_exit_code(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(CFG.replace("x_hi = 0.5", "x_hi = 6") + f"budget = 5\noutput = {tmp_path / 'r.csv'}\n")
    assert main(["simulate", "--config", str(cfg), "--workers", "1"]) == 3
    assert any(r.budget_exceeded for r in load_records(tmp_path / "r.csv"))


def test_other_commands(capsys):
    assert main(["renewal", "--x", "4", "--reps", "2000"]) == 0
    assert main(["renewal", "--ln-n", "10", "--reps", "2000"]) == 0
    assert main(["brw", "--depth", "5", "--reps", "20"]) == 0
    assert main(["cox", "--x-hi", "1", "--draws", "3"]) == 0
    assert main(["stein-demo", "--families", "20"]) == 0
    assert "violations: 0" in capsys.readouterr().out
    assert main(["constants", "--dist", "gaussian(1,1)"]) == 1


def test_console_script():
    out = subprocess.run([sys.executable, "-m", "fpp.cli", "constants"], capture_output=True, text=True, check=True)
    assert "alpha" in out.stdout
