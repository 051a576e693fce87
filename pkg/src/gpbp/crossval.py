"""Nested cross-validation for held-out rating prediction.

Each test fold holds out one k-th of the edges; the remainder is split
into a small validation set (for picking the ridge parameter) and the
training set.  The model selected on validation is scored on the test
fold as-is, without retraining, and both its terminal and best-sweep
test RMSE are reported since the two can differ when a solver overfits
with sweeps.
"""

import warnings

import numpy as np

from .approx import approx_run
from .errors import DivergenceError, SingularityError
from .exact import run as exact_run
from .obsgraph import split_folds

ALGORITHMS = ("gpbp", "alsmp", "approxgpbp", "approxalsmp")


def geometric_lambda_grid(low, high, num):
    """num geometrically spaced ridge values, endpoints included."""
    if low <= 0 or high < low:
        raise ValueError("need 0 < low <= high")
    if num < 1:
        raise ValueError("num must be at least 1")
    return np.geomspace(low, high, num)


def run_algorithm(algorithm, graph, config, **kwargs):
    """Dispatch a run by algorithm name; the mode comes from the name."""
    if algorithm not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
    mode = "gpbp" if algorithm.endswith("gpbp") else "alsmp"
    cfg = config.replace(mode=mode)
    if algorithm.startswith("approx"):
        return approx_run(graph, cfg, **kwargs)
    return exact_run(graph, cfg, **kwargs)


class CVResult:
    """Per-fold selections plus the long-format per-sweep records."""

    def __init__(self, algorithm, rows, fold_summaries, failures, n_folds):
        self.algorithm = algorithm
        self.rows = rows
        self.fold_summaries = fold_summaries
        self.failures = failures
        self.n_folds = n_folds

    def _aggregate(self, key):
        vals = np.array([f[key] for f in self.fold_summaries], dtype=float)
        mean = float(vals.mean())
        stderr = float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) >= 2 else float("nan")
        return mean, stderr

    def summary(self):
        terminal = self._aggregate("rmse_test_terminal")
        best = self._aggregate("rmse_test_best_sweep")
        return {
            "algorithm": self.algorithm,
            "folds_requested": self.n_folds,
            "folds_completed": len(self.fold_summaries),
            "folds_failed": self.n_folds - len(self.fold_summaries),
            "rmse_test_terminal_mean": terminal[0],
            "rmse_test_terminal_stderr": terminal[1],
            "rmse_test_best_sweep_mean": best[0],
            "rmse_test_best_sweep_stderr": best[1],
            "selected_lambdas": [f["lambda"] for f in self.fold_summaries],
        }


def nested_cv(graph, lam_grid, config, k=10, validation_fraction=0.05,
              algorithm="alsmp"):
    """k-fold nested CV: select lambda per fold on validation RMSE
    (terminal sweep), score the selected run on the test fold.

    Solver failures are recorded per (fold, lambda); a fold with no
    surviving lambda is dropped from the aggregates with a warning.
    """
    lam_grid = [float(l) for l in lam_grid]
    if not lam_grid:
        raise ValueError("lam_grid must be nonempty")
    config.validate()
    folds = split_folds(graph, k, validation_fraction, seed=config.seed)

    rows = []
    fold_summaries = []
    failures = []
    for fi, fold in enumerate(folds):
        train = graph.subgraph(fold.train)
        test = graph.subgraph(fold.test)
        validation = graph.subgraph(fold.validation) if fold.validation.size else None
        if validation is None and len(lam_grid) > 1:
            raise ValueError(
                "empty validation split cannot select among multiple lambda values"
            )
        best = None
        for lam in lam_grid:
            cfg = config.replace(lam=lam)
            try:
                res = run_algorithm(
                    algorithm, train, cfg,
                    validation_edges=validation, test_edges=test,
                )
            except (DivergenceError, SingularityError) as exc:
                failures.append({"fold": fi, "lambda": lam, "error": str(exc)})
                continue
            sweeps = res.trace.column("sweep")
            vals = res.trace.column("rmse_validation") if validation is not None else None
            tests = res.trace.column("rmse_test")
            for idx in range(len(sweeps)):
                rows.append({
                    "algorithm": algorithm,
                    "fold": fi,
                    "lambda": lam,
                    "sweep": int(sweeps[idx]),
                    "rmse_validation": vals[idx] if vals is not None else None,
                    "rmse_test": tests[idx],
                })
            val_rmse = vals[-1] if vals is not None else float("nan")
            if best is None or (vals is not None and val_rmse < best[0]):
                best = (val_rmse, lam, res)
        if best is None:
            continue
        val_rmse, lam_star, res = best
        tests = res.trace.column("rmse_test")
        sweeps = res.trace.column("sweep")
        best_idx = int(np.argmin(tests))
        fold_summaries.append({
            "fold": fi,
            "lambda": lam_star,
            "rmse_validation": val_rmse,
            "rmse_test_terminal": float(tests[-1]),
            "rmse_test_best_sweep": float(tests[best_idx]),
            "best_sweep": int(sweeps[best_idx]),
        })

    if len(fold_summaries) < k:
        warnings.warn(
            f"{k - len(fold_summaries)} of {k} folds failed; "
            "aggregates cover the completed folds only",
            RuntimeWarning,
        )
    if not fold_summaries:
        raise RuntimeError("every fold failed; no cross-validation result")
    return CVResult(algorithm, rows, fold_summaries, failures, k)
