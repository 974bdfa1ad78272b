import json

import numpy as np
import pytest

from sqfastica.cli import main, read_config
from sqfastica.distributions import make_exp_power, sample, uniform


def run(capsys, *argv):
    assert main(list(argv)) == 0
    return capsys.readouterr().out


def test_are_pair(capsys):
    out = run(capsys, "are", "--dist1", "ep:1", "--dist2", "normal", "--nonlinearity", "pow3")
    assert "ARE(sym2,sym) = 1.102564" in out
    assert "ARE(sym2,defl) = 1.000000" in out


def test_are_gaussian_pair_reports_undefined(capsys):
    out = run(capsys, "are", "--dist1", "normal", "--dist2", "normal")
    assert "undefined" in out


def test_are_table_text(capsys):
    out = run(capsys, "are", "--table", "--dists", "ep:1,normal,uniform", "--nonlinearity", "pow3")
    lines = out.strip().splitlines()
    assert lines[0].split() == ["L", "N", "U"]
    assert lines[2].split()[2] == "--"


def test_check_g(capsys):
    out = run(capsys, "check-g", "--nonlinearity", "gaus", "--grid", "181")
    assert out.count("VIOLATED") == 3


def test_contour_csv(capsys):
    out = run(capsys, "contour", "--family", "EP", "--shapes", "1,4", "--nonlinearity", "pow3")
    assert out.splitlines()[0] == "shape1,shape2,value"
    assert len(out.splitlines()) == 5


def test_estimate_and_mdi(tmp_path, capsys):
    S = np.vstack([sample(make_exp_power(1), 1000, 1), sample(uniform(), 1000, 2)])
    A = np.array([[1.0, 2.0], [0.5, 1.5]])
    np.savetxt(tmp_path / "x.csv", (A @ S).T, delimiter=",")
    np.savetxt(tmp_path / "omega.csv", A, delimiter=",")
    out = tmp_path / "fit.json"
    run(capsys, "estimate", "--in", str(tmp_path / "x.csv"), "--out", str(out), "--method", "defl")
    doc = json.loads(out.read_text())
    assert doc["converged"] and doc["method"] == "defl"
    G = np.array(doc["Gamma"])
    np.savetxt(tmp_path / "g.csv", G, delimiter=",")
    text = run(capsys, "mdi", "--gamma", str(tmp_path / "g.csv"), "--omega", str(tmp_path / "omega.csv"),
               "--n", "1000")
    d = float(text.split()[2])
    assert 0 <= d < 0.2
    assert "n(p-1)D^2" in text


def test_simulate_json_with_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small run\nnonlinearity = pow3\nn = 300\nM = 3\nmax-iter = 500\nformat = json\n")
    doc = json.loads(run(capsys, "--config", str(cfg), "simulate", "--method", "sym2", "--seed", "7"))
    assert doc["config"]["n"] == 300 and doc["config"]["M"] == 3
    assert doc["config"]["max_iter"] == 500
    assert doc["config"]["nonlinearity"] == "pow3"
    assert doc["seed"] == 7
    assert list(doc["summary"]) == ["sym2"]


def test_command_line_overrides_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 300\nM = 2\nformat = json\n")
    doc = json.loads(run(capsys, "--config", str(cfg), "simulate", "--M", "1", "--method", "sym"))
    assert doc["config"]["M"] == 1


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    with pytest.raises(SystemExit):
        main(["--config", str(cfg), "simulate"])


def test_read_config(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("in = data.csv\nmax-iter = 10  # comment\nflag = yes\n")
    assert read_config(p) == {"infile": "data.csv", "max_iter": "10", "flag": True}
