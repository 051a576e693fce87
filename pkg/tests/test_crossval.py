"""Tests for ridge-parameter selection by nested cross-validation."""

import numpy as np
import pytest

from gpbp.config import SolverConfig
from gpbp.crossval import (
    ALGORITHMS,
    geometric_lambda_grid,
    nested_cv,
    run_algorithm,
)
from gpbp.obsgraph import NoiseModel, ObservationGraph, generate_synthetic, split_folds


def rating_instance(seed=0):
    graph, _ = generate_synthetic(12, 18, 2, NoiseModel.gaussian(0.2), 4, seed=seed)
    return graph


def test_geometric_grid_endpoints_and_ratio():
    grid = geometric_lambda_grid(1.0, 5.0, 11)
    assert len(grid) == 11
    assert grid[0] == pytest.approx(1.0, rel=1e-12)
    assert grid[-1] == pytest.approx(5.0, rel=1e-12)
    ratios = grid[1:] / grid[:-1]
    np.testing.assert_allclose(ratios, 5.0 ** 0.1, rtol=1e-12)


@pytest.mark.parametrize("low,high,num", [(0.0, 5.0, 3), (2.0, 1.0, 3), (1.0, 5.0, 0)])
def test_geometric_grid_rejects(low, high, num):
    with pytest.raises(ValueError):
        geometric_lambda_grid(low, high, num)


def test_run_algorithm_dispatch():
    graph = rating_instance()
    config = SolverConfig(rank=2, lam=0.8, max_sweeps=3, seed=1)
    exact = run_algorithm("gpbp", graph, config)
    assert "skipped_corrections" not in exact.trace.columns
    assert exact.state.u_alpha.any()

    approx = run_algorithm("approxalsmp", graph, config)
    assert "skipped_corrections" in approx.trace.columns
    assert not approx.state.u_alpha.any()

    with pytest.raises(ValueError):
        run_algorithm("svd", graph, config)


def test_split_folds_partition_and_determinism():
    graph = rating_instance()
    folds = split_folds(graph, 4, validation_fraction=0.05, seed=3)
    assert len(folds) == 4
    all_test = np.sort(np.concatenate([f.test for f in folds]))
    assert np.array_equal(all_test, np.arange(graph.n_edges))
    for f in folds:
        ids = np.concatenate([f.train, f.validation, f.test])
        assert len(np.unique(ids)) == graph.n_edges
        rest = graph.n_edges - f.test.size
        assert f.validation.size == int(round(0.05 * rest))
    again = split_folds(graph, 4, validation_fraction=0.05, seed=3)
    for a, b in zip(folds, again):
        assert np.array_equal(a.train, b.train)
        assert np.array_equal(a.validation, b.validation)
        assert np.array_equal(a.test, b.test)


def test_split_folds_rejects_bad_arguments():
    graph = rating_instance()
    with pytest.raises(ValueError):
        split_folds(graph, 1)
    with pytest.raises(ValueError):
        split_folds(graph, graph.n_edges + 1)
    with pytest.raises(ValueError):
        split_folds(graph, 4, validation_fraction=1.0)


def test_nested_cv_selects_on_terminal_validation():
    graph = rating_instance(seed=5)
    lam_grid = [0.5, 1.5]
    config = SolverConfig(rank=2, lam=1.0, mode="alsmp", max_sweeps=6,
                          conv_tol=1e-300, seed=2)
    result = nested_cv(graph, lam_grid, config, k=4,
                       validation_fraction=0.1, algorithm="alsmp")
    assert result.failures == []
    assert len(result.fold_summaries) == 4
    assert len(result.rows) == 4 * len(lam_grid) * 6

    for summary in result.fold_summaries:
        fold = summary["fold"]
        terminal = {}
        for row in result.rows:
            if row["fold"] == fold and row["sweep"] == 6:
                terminal[row["lambda"]] = row["rmse_validation"]
        assert summary["lambda"] == min(terminal, key=terminal.get)
        assert summary["rmse_validation"] == terminal[summary["lambda"]]
        # the selected run is scored on test as-is
        test_curve = [row["rmse_test"] for row in result.rows
                      if row["fold"] == fold and row["lambda"] == summary["lambda"]]
        assert summary["rmse_test_terminal"] == test_curve[-1]
        assert summary["rmse_test_best_sweep"] == min(test_curve)
        assert summary["rmse_test_best_sweep"] <= summary["rmse_test_terminal"]

    top = result.summary()
    assert top["folds_requested"] == 4
    assert top["folds_completed"] == 4
    assert top["folds_failed"] == 0
    assert len(top["selected_lambdas"]) == 4
    assert np.isfinite(top["rmse_test_terminal_mean"])
    assert np.isfinite(top["rmse_test_terminal_stderr"])

    again = nested_cv(graph, lam_grid, config, k=4,
                      validation_fraction=0.1, algorithm="alsmp")
    assert again.fold_summaries == result.fold_summaries


def test_nested_cv_records_solver_failures():
    # lam = 0 with planted degree-1 rows leaves singular cavity systems;
    # those (fold, lambda) runs are recorded and the fold falls back to
    # the surviving lambda.
    base = rating_instance(seed=7)
    rows = np.concatenate([base.rows, [base.n_rows, base.n_rows + 1]])
    cols = np.concatenate([base.cols, [0, 1]])
    values = np.concatenate([base.values, [0.7, -0.4]])
    graph = ObservationGraph(base.n_rows + 2, base.n_cols, rows, cols, values)
    config = SolverConfig(rank=2, lam=1.0, mode="alsmp", max_sweeps=4, seed=2)
    result = nested_cv(graph, [0.0, 0.8], config, k=4,
                       validation_fraction=0.1, algorithm="alsmp")
    assert result.failures
    assert all(f["lambda"] == 0.0 for f in result.failures)
    assert all(set(f) == {"fold", "lambda", "error"} for f in result.failures)
    assert len(result.fold_summaries) == 4
    assert all(s["lambda"] == 0.8 for s in result.fold_summaries)


def test_nested_cv_all_folds_failing_raises():
    # A perfect matching has every row at degree 1: lam = 0 fails in
    # every fold, which must warn and then raise.
    n = 16
    graph = ObservationGraph(n, n, np.arange(n), np.arange(n),
                             np.linspace(-1, 1, n))
    config = SolverConfig(rank=2, lam=1.0, mode="alsmp", max_sweeps=3, seed=0)
    with pytest.warns(RuntimeWarning):
        with pytest.raises(RuntimeError):
            nested_cv(graph, [0.0], config, k=4,
                      validation_fraction=0.1, algorithm="alsmp")


def test_nested_cv_rejects_bad_grids():
    graph = rating_instance(seed=9)
    config = SolverConfig(rank=2, lam=1.0, mode="alsmp", max_sweeps=3, seed=0)
    with pytest.raises(ValueError):
        nested_cv(graph, [], config, k=3)
    with pytest.raises(ValueError):
        nested_cv(graph, [0.5, 1.0], config, k=3, validation_fraction=0.0)


def test_algorithm_names_cover_both_solvers_and_modes():
    assert ALGORITHMS == ("gpbp", "alsmp", "approxgpbp", "approxalsmp")
