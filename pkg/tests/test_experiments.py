"""Experiment drivers: config resolution, seed pairing, figure branches."""

import os

import pytest

from gpbp.experiments import (PD_DEFAULTS, SYNTH_DEFAULTS, resolve_config,
                              run_experiment, run_pd, run_synth)
from gpbp.trace import read_csv


def test_resolve_fills_defaults_and_rejects_unknown():
    cfg = resolve_config({"rank": 3, "task": "synth"}, SYNTH_DEFAULTS, "synth")
    assert cfg["rank"] == 3
    assert cfg["n_rows"] == SYNTH_DEFAULTS["n_rows"]
    with pytest.raises(ValueError, match="sigmq"):
        resolve_config({"sigmq": 0.1}, SYNTH_DEFAULTS, "synth")
    with pytest.raises(ValueError, match="d_us"):
        resolve_config({"rank": 3, "d_us": [1]}, PD_DEFAULTS, "pd")


def test_synth_shares_instances_across_grid(tmp_path):
    out = str(tmp_path)
    run_synth({"n_rows": 24, "rank": 2, "col_degrees": [6], "sigma": 0.05,
               "instances": 1, "lams": [0.1], "gammas": [0.0, 0.3],
               "algorithms": ["gpbp", "alsmp"], "max_sweeps": 3}, out)
    seeds = set()
    for name in os.listdir(os.path.join(out, "runs")):
        meta, _ = read_csv(os.path.join(out, "runs", name))
        seeds.add((meta["graph_seed"], meta["config"]["seed"]))
    # one instance: every (algorithm, gamma) cell sees the same graph and init
    assert len(seeds) == 1


def test_synth_rate_heatmap_branch(tmp_path):
    out = str(tmp_path)
    summary = run_synth({"n_rows": 24, "rank": 2, "col_degrees": [4, 6],
                         "sigma": 0.05, "instances": 2, "lams": [0.1],
                         "gammas": [0.0, 0.5], "algorithms": ["gpbp"],
                         "max_sweeps": 3}, out)
    assert os.path.exists(os.path.join(out, "rate_gpbp.svg"))
    assert len(summary["aggregate"]) == 4
    for row in summary["aggregate"]:
        assert 0.0 <= row["reconstruction_rate"] <= 1.0


def test_pd_degree_sweep_figure(tmp_path):
    out = str(tmp_path)
    summary = run_pd({"rank": 2, "d_vs": [4, 6], "lams": [0.05],
                      "n_pop": 120, "max_sweeps": 4, "monitor_samples": 300,
                      "readout_samples": 400}, out)
    assert len(summary["results"]) == 2
    assert {r["d_u"] for r in summary["results"]} == {8, 12}
    assert os.path.exists(os.path.join(out, "readout_vs_degree.svg"))


def test_run_experiment_rejects_bad_task(tmp_path):
    with pytest.raises(ValueError, match="task"):
        run_experiment({"task": "frobnicate"}, str(tmp_path))
