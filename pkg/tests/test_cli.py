"""Command line front-end: exit codes, outputs, env overrides."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from gpbp.cli import main
from gpbp.trace import read_csv


def write_config(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
    return str(path)


SYNTH_MIN = {
    "n_rows": 24, "rank": 2, "col_degrees": [8], "sigma": 0.05,
    "instances": 2, "lams": [0.01], "algorithms": ["gpbp"],
    "max_sweeps": 15, "conv_tol": 1e-300, "epsilon": 0.05,
}

PD_MIN = {
    "rank": 2, "d_vs": [6], "lams": [0.01], "n_pop": 120,
    "max_sweeps": 10, "monitor_samples": 300, "readout_samples": 500,
}


def test_synth_writes_selfdescribing_outputs(tmp_path):
    cfg = write_config(tmp_path / "c.json", SYNTH_MIN)
    out = str(tmp_path / "out")
    assert main(["synth", "--config", cfg, "--out", out]) == 0
    for name in ("summary.csv", "aggregate.csv", "summary.json",
                 "nrmse_vs_sweep.svg", "final_nrmse.svg"):
        assert os.path.exists(os.path.join(out, name)), name
    meta, rows = read_csv(os.path.join(out, "summary.csv"))
    assert len(rows) == 2
    assert meta["config"]["seed"] == 0
    assert meta["config"]["col_degrees"] == [8]
    run_files = os.listdir(os.path.join(out, "runs"))
    assert len(run_files) == 2
    run_meta, run_rows = read_csv(os.path.join(out, "runs", run_files[0]))
    assert run_meta["config"]["rank"] == 2
    assert len(run_rows) == 15
    with open(os.path.join(out, "summary.json"), encoding="utf-8") as fh:
        summary = json.load(fh)
    assert summary["task"] == "synth"
    assert summary["runs"] == 2
    assert summary["aggregate"][0]["n"] == 2


def test_pd_single_point_one_row(tmp_path):
    cfg = write_config(tmp_path / "c.json", PD_MIN)
    out = str(tmp_path / "out")
    assert main(["pd", "--config", cfg, "--out", out]) == 0
    _, rows = read_csv(os.path.join(out, "summary.csv"))
    assert len(rows) == 1
    assert rows[0]["mode"] == "gpbp"
    assert float(rows[0]["readout_nrmse"]) > 0
    assert os.path.exists(os.path.join(out, "readout_vs_sweep.svg"))


def test_bad_field_value_names_field(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", dict(SYNTH_MIN, gammas=[1.5]))
    assert main(["synth", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "gamma" in capsys.readouterr().err


def test_unknown_key_names_key(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", dict(SYNTH_MIN, rnak=3))
    assert main(["synth", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "rnak" in capsys.readouterr().err


def test_pd_population_below_minimum(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", dict(PD_MIN, n_pop=50))
    assert main(["pd", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "n_pop" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["synth", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "o")]) == 2
    assert "config error" in capsys.readouterr().err


def test_non_object_config(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text("[1, 2]")
    assert main(["synth", "--config", str(path),
                 "--out", str(tmp_path / "o")]) == 2


def test_task_key_must_match_subcommand(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", dict(SYNTH_MIN, task="pd"))
    assert main(["synth", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert "task" in capsys.readouterr().err


def test_divergence_exits_3_without_allow_failures(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json",
                       dict(SYNTH_MIN, divergence_cap=1e-12))
    assert main(["synth", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    assert "divergence" in capsys.readouterr().err


def test_allow_failures_records_and_continues(tmp_path):
    cfg = write_config(tmp_path / "c.json",
                       dict(SYNTH_MIN, divergence_cap=1e-12))
    out = str(tmp_path / "out")
    assert main(["synth", "--config", cfg, "--out", out,
                 "--allow-failures"]) == 0
    with open(os.path.join(out, "summary.json"), encoding="utf-8") as fh:
        summary = json.load(fh)
    assert summary["runs"] == 0
    assert len(summary["failures"]) == 2
    assert "divergence" in summary["failures"][0]["error"]


def test_env_overrides(tmp_path, monkeypatch):
    cfg = write_config(tmp_path / "c.json",
                       dict(SYNTH_MIN, divergence_cap=1e-12))
    out = str(tmp_path / "envout")
    monkeypatch.setenv("GPBP_OUT", out)
    monkeypatch.setenv("GPBP_ALLOW_FAILURES", "1")
    assert main(["synth", "--config", cfg]) == 0
    assert os.path.exists(os.path.join(out, "summary.json"))


def test_thread_cap_accepted(tmp_path):
    cfg = write_config(tmp_path / "c.json", SYNTH_MIN)
    out = str(tmp_path / "out")
    assert main(["synth", "--config", cfg, "--out", out, "--threads", "1"]) == 0


def test_verify_reports_each_check(capsys):
    assert main(["verify"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    checks, tally = lines[:-1], lines[-1]
    assert len(checks) >= 6
    assert all(line.startswith("PASS") for line in checks)
    names = [line.split()[1].rstrip(":") for line in checks]
    assert "quadrature_moments" in names
    assert "zero_alpha_reductions" in names
    assert tally.endswith("checks passed")


def test_realdata_cross_validation(tmp_path):
    rng = np.random.default_rng(0)
    lines = []
    for user in range(8):
        for movie in rng.choice(6, size=5, replace=False):
            rating = int(rng.integers(1, 6))
            lines.append(f"{user + 1}::{movie + 1}::{rating}::97830{user}")
    data = tmp_path / "ratings.dat"
    data.write_text("\n".join(lines) + "\n")
    cfg = write_config(tmp_path / "c.json", {
        "path": str(data), "rank": 2, "algorithms": ["alsmp", "approxalsmp"],
        "lam_low": 0.5, "lam_high": 2.0, "lam_num": 2, "k_folds": 2,
        "validation_fraction": 0.1, "max_sweeps": 4,
    })
    out = str(tmp_path / "out")
    assert main(["realdata", "--config", cfg, "--out", out]) == 0
    meta, folds = read_csv(os.path.join(out, "folds.csv"))
    assert len(folds) == 4
    assert {f["algorithm"] for f in folds} == {"alsmp", "approxalsmp"}
    _, rows = read_csv(os.path.join(out, "rows.csv"))
    assert len(rows) == 2 * 2 * 2 * 4
    with open(os.path.join(out, "summary.json"), encoding="utf-8") as fh:
        summary = json.load(fh)
    assert set(summary["algorithms"]) == {"alsmp", "approxalsmp"}
    assert summary["algorithms"]["alsmp"]["folds_completed"] == 2
    assert os.path.exists(os.path.join(out, "validation_vs_lambda.svg"))


def test_realdata_missing_path_is_config_error(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", {"rank": 2})
    assert main(["realdata", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    cfg = write_config(tmp_path / "c2.json",
                       {"path": str(tmp_path / "missing.dat")})
    assert main(["realdata", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


def test_console_script_is_wired():
    proc = subprocess.run(
        [sys.executable, "-m", "gpbp.cli", "--help"],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    for sub in ("synth", "pd", "realdata", "verify"):
        assert sub in proc.stdout
