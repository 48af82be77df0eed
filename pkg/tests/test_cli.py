import csv
import json
import math
import subprocess
import sys

import pytest

from parisilab import __version__
from parisilab.cli import ConfigError, apply_override, main, resolve_config

LOG2 = math.log(2.0)


def write(tmp_path, cfg):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def run(tmp_path, command, cfg, *extra):
    out = tmp_path / "out"
    code = main([command, write(tmp_path, cfg), "--out", str(out), *extra])
    return code, out


def test_evaluate_dirac_zero(tmp_path, capsys):
    code, out = run(tmp_path, "evaluate", {"model": {"betas": [[2, 1.0]], "h": 0.0}})
    assert code == 0
    res = json.loads((out / "evaluate.json").read_text())
    assert res["reports"][0]["free_energy"] == pytest.approx(LOG2 + 0.5, abs=1e-12)
    resolved = json.loads((out / "resolved_config.json").read_text())
    assert resolved["version"] == __version__ and resolved["model"]["betas"] == [[2, 1.0]]


def test_evaluate_two_measures_rows(tmp_path):
    cfg = {"model": {"betas": [[2, 1.0]]}, "grid": {"dx": 0.01},
           "measures": [[[0.0, 1.0]], [[0.2, 0.5], [0.8, 0.5]]]}
    code, out = run(tmp_path, "evaluate", cfg)
    rows = list(csv.reader(open(out / "evaluate.csv")))
    assert code == 0 and [r[0] for r in rows[1:]] == ["0", "1"]
    assert len(rows[1][3]) >= 17  # 17 significant digits


def test_bad_weights_exit_code(tmp_path, capsys):
    cfg = {"model": {"betas": [[2, 1.0]]}, "measures": [[[0.2, 0.5], [0.8, 0.4]]]}
    code, _ = run(tmp_path, "evaluate", cfg)
    assert code == 2
    assert "weights must sum to 1" in capsys.readouterr().err


@pytest.mark.parametrize("cfg", [{"model": {"betas": [[2, 1.0]]}, "bogus": 1},
                                 {"model": {"betas": [[2, "x"]]}},
                                 {"model": {"betas": [[2, 1.0]]}, "grid": {"x_max": 1.0}}])
def test_schema_and_domain_rejections(tmp_path, cfg):
    assert run(tmp_path, "evaluate", cfg)[0] == 2


def test_minimize_zero_atoms(tmp_path, capsys):
    code, _ = run(tmp_path, "minimize", {"model": {"betas": [[2, 0.3]]}}, "--set", "optimizer.K=0")
    assert code == 2 and "K must be" in capsys.readouterr().err


def test_minimize_single_restart_skips(tmp_path, capsys, caplog):
    code, out = run(tmp_path, "minimize", {"model": {"betas": [[2, 0.3]]}, "optimizer": {"K": 1, "restarts": 1}})
    assert code == 0
    assert "uniqueness SKIPPED" in capsys.readouterr().out
    assert "skipped" in caplog.text


def test_minimize_high_temperature(tmp_path, capsys):
    cfg = {"model": {"betas": [[2, 0.3]]}, "optimizer": {"K": 2, "restarts": 3}}
    code, out = run(tmp_path, "minimize", cfg)
    res = json.loads((out / "minimize.json").read_text())
    assert code == 0
    assert res["report"]["free_energy"] == pytest.approx(LOG2 + 0.045, abs=res["error_budget"] + 1e-10)
    rows = list(csv.reader(open(out / "restarts.csv")))
    assert rows[0] == ["restart_id", "value", "d_to_best"] and len(rows) == 4


def test_convexity_identical(tmp_path, capsys):
    cfg = {"model": {"betas": [[2, 1.0]]}, "grid": {"dx": 0.01}, "measures": [[[0.3, 1.0]], [[0.3, 1.0]]]}
    code, out = run(tmp_path, "convexity-scan", cfg)
    assert code == 0
    assert "convexity PASS" in capsys.readouterr().out
    gaps = [float(r[2]) for r in list(csv.reader(open(out / "convexity.csv")))[1:]]
    assert all(abs(g) <= 1e-9 for g in gaps)


def test_bounds_three_atoms(tmp_path, capsys):
    cfg = {"model": {"betas": [[2, 1.2], [3, 0.5]], "h": 0.4}, "grid": {"dx": 0.01},
           "measures": [[[0.1, 0.2], [0.5, 0.3], [0.9, 0.5]]]}
    code, out = run(tmp_path, "verify-bounds", cfg)
    text = capsys.readouterr().out
    assert code == 0
    for name in ("gradient_bound", "curvature_positive", "curvature_bound", "third_derivative_bound"):
        assert f"{name}[0] PASS" in text
    assert (out / "solution_0.csv").exists()


def test_representation_determinism(tmp_path, capsys):
    cfg = {"model": {"betas": [[2, 0.2]], "h": 0.3}, "grid": {"dx": 0.01},
           "measures": [[[0.2, 0.3], [0.6, 0.7]]],
           "control_lab": {"n_paths": 2000, "dr": 0.005, "richardson": False, "random_controls": 2}}
    a = main(["verify-representation", write(tmp_path, cfg), "--out", str(tmp_path / "a")])
    b = main(["verify-representation", write(tmp_path, cfg), "--out", str(tmp_path / "b")])
    assert a == b == 0
    assert (tmp_path / "a" / "representation.csv").read_bytes() == (tmp_path / "b" / "representation.csv").read_bytes()
    assert "representation[optimal] PASS" in capsys.readouterr().out


def test_oracle_command(tmp_path, capsys):
    code, out = run(tmp_path, "oracle", {"model": {"betas": [[2, 0.3]]}, "oracle": {"N": 8, "seeds": list(range(16))}})
    assert code == 0 and "annealed_bound PASS" in capsys.readouterr().out
    assert (out / "oracle.csv").exists()


def test_oracle_refuses_large_n(tmp_path):
    assert run(tmp_path, "oracle", {"model": {"betas": [[2, 0.3]]}, "oracle": {"N": 22}})[0] == 2


def test_overrides():
    cfg = {"model": {"betas": [[2, 1.0]]}}
    apply_override(cfg, "model.h=0.5")
    apply_override(cfg, "output=run dir")
    assert cfg["model"]["h"] == 0.5 and cfg["output"] == "run dir"
    with pytest.raises(ConfigError):
        apply_override(cfg, "novalue")
    with pytest.raises(ConfigError):
        resolve_config({"model": {"betas": [[2, 1.0]]}}, ["optimizer.K=\"two\""])


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("PARISILAB_THREADS", "0")
    assert run(tmp_path, "evaluate", {"model": {"betas": [[2, 1.0]]}})[0] == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "parisilab.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout
