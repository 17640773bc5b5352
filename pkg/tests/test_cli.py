import json
import os

import numpy as np
import pytest

from wpneck.cli import main, run_suite
from wpneck.config import RunConfig, load_config


def test_unknown_suite_is_usage_error(capsys):
    assert main(["verify", "nosuch"]) == 2
    assert "unknown suite" in capsys.readouterr().err


def test_verify_cylinder_report(tmp_path):
    out = tmp_path / "report.json"
    code = main(["verify", "cylinder", "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["suite"] == "cylinder"
    assert report["pass"] is True
    for check in report["checks"]:
        assert set(check) == {"name", "value", "bound", "pass"}


def test_sweep_divergence_csv_deterministic(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    args = ["sweep", "divergence", "--ell-count", "5", "--ell-min", "1e-2",
            "--ell-max", "1e-1"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().strip().splitlines()
    assert lines[0].strip() == "ell,quantity,value"
    assert len(lines) == 6
    # rows sorted ascending in ell
    ells = [float(row.split(",")[0]) for row in lines[1:]]
    assert ells == sorted(ells)


def test_sweep_wp_header(tmp_path):
    out = tmp_path / "wp.csv"
    code = main(["sweep", "wp", "--ell-count", "3", "--ell-min", "3e-2",
                 "--ell-max", "1e-1", "--grid-n", "2048", "--out", str(out)])
    assert code == 0
    header = out.read_text().splitlines()[0].strip()
    assert header == "ell,g_ll,g_lw,g_ww"


def test_fit_roundtrip_through_files(tmp_path):
    csv_path = tmp_path / "series.csv"
    ells = np.geomspace(1e-3, 1e-1, 36)
    vals = 1.5 + 0.25 * np.sqrt(ells)
    rows = ["ell,value"] + [f"{e},{v}" for e, v in zip(ells, vals)]
    csv_path.write_text("\n".join(rows) + "\n")
    out = tmp_path / "fit.json"
    code = main(["fit", str(csv_path), "--half-powers", "2", "--log-powers", "0",
                 "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    terms = {(t["half_power"], t["log_power"]): t["coeff"]
             for t in payload["terms"]}
    assert terms[(0, 0)] == pytest.approx(1.5, abs=1e-8)
    assert terms[(1, 0)] == pytest.approx(0.25, abs=1e-8)


def test_fit_ill_conditioned_nonzero_exit(tmp_path, capsys):
    csv_path = tmp_path / "series.csv"
    ells = np.geomspace(1e-3, 1e-1, 200)
    rows = ["ell,value"] + [f"{e},1.0" for e in ells]
    csv_path.write_text("\n".join(rows) + "\n")
    code = main(["fit", str(csv_path), "--half-powers", "14",
                 "--log-powers", "3"])
    assert code == 1
    assert "condition number" in capsys.readouterr().err


def test_fit_missing_file_is_usage_error(capsys):
    assert main(["fit", "/nonexistent/file.csv"]) == 2


def test_config_file_and_env(tmp_path, monkeypatch):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# comment\nell_min = 0.002\nmodes = 4\n")
    cfg = load_config(str(cfg_file))
    assert cfg.ell_min == 0.002
    assert cfg.modes == 4
    monkeypatch.setenv("WPNECK_CONFIG", str(cfg_file))
    cfg2 = load_config()
    assert cfg2.ell_min == 0.002
    cfg3 = load_config(str(cfg_file), overrides={"modes": 6})
    assert cfg3.modes == 6


def test_config_rejects_unknown_keys(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("elll_min = 0.1\n")
    with pytest.raises(ValueError):
        load_config(str(bad))
    with pytest.raises(ValueError):
        load_config(None, overrides={"nonsense": 3})


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(ell_min=0.5, ell_max=0.1)
    with pytest.raises(ValueError):
        RunConfig(barrier_alpha=1.5)
    grid = RunConfig(ell_min=1e-2, ell_max=1e-1, ell_count=4).ell_grid()
    assert len(grid) == 4 and grid[0] == pytest.approx(1e-2)


def test_run_suite_registry():
    cfg = RunConfig(grid_n=2048)
    report = run_suite("cylinder", cfg)
    assert report["pass"]


def test_verify_failure_exits_one(tmp_path):
    # absurd identity tolerance forces check failures -> exit code 1
    cfg_file = tmp_path / "strict.cfg"
    cfg_file.write_text("identity_tol = 1e-30\ngrid_n = 2048\n")
    out = tmp_path / "r.json"
    code = main(["verify", "weitzenboeck", "--config", str(cfg_file),
                 "--out", str(out)])
    assert code == 1
    report = json.loads(out.read_text())
    assert report["pass"] is False
