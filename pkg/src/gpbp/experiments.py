"""Batch experiment drivers behind the command line interface.

Each driver takes a plain config dict (usually parsed from a JSON
file), runs a parameter grid, and writes per-run trace CSVs, grouped
summary CSVs, SVG figures, and a summary JSON into the output
directory.  Unknown config keys are rejected so typos fail fast.
"""

import json
import os

import numpy as np

from .cavity import alpha_from
from .config import SolverConfig
from .crossval import geometric_lambda_grid, nested_cv, run_algorithm
from .errors import DivergenceError, SingularityError
from .exact import half_sweep, init_state
from .metrics import reconstruction_rate
from .obsgraph import NoiseModel, generate_synthetic, load_ratings, sparsify_by_user
from .oracles import (alt_min_oracle, completion_objective, quadrature_moments,
                      svt_solution)
from .plotting import save_errorbars, save_heatmap, save_trace_curves
from .popdyn import PDConfig, pd_run
from .seeding import derive_seed
from .trace import write_csv

SYNTH_DEFAULTS = {
    "n_rows": 200,
    "aspect": 2.0,
    "rank": 5,
    "col_degrees": [15],
    "lams": [1.0],
    "gammas": [0.0],
    "algorithms": ["gpbp"],
    "noise": "gaussian",
    "sigma": 0.1,
    "noise_p": 0.1,
    "instances": 5,
    "max_sweeps": 500,
    "conv_tol": 1e-8,
    "init_scale": 1.0,
    "refresh_interval": 25,
    "divergence_cap": 1e8,
    "epsilon": 0.01,
    "seed": 0,
}

PD_DEFAULTS = {
    "rank": 5,
    "lams": [1.0],
    "d_vs": [15],
    "aspect": 2.0,
    "modes": ["gpbp"],
    "gammas": [0.0],
    "noise": "gaussian",
    "sigma": 0.1,
    "noise_p": 0.1,
    "n_pop": 2000,
    "init_noise": 0.1,
    "random_init": False,
    "max_sweeps": 500,
    "burn_in_window": 10,
    "burn_in_rtol": 0.01,
    "monitor_samples": 10000,
    "readout_samples": 100000,
    "seed": 0,
}

REALDATA_DEFAULTS = {
    "path": None,
    "format": "movielens_dat",
    "algorithms": ["alsmp"],
    "rank": 10,
    "gamma": 0.0,
    "lam_low": 1.0,
    "lam_high": 5.0,
    "lam_num": 11,
    "k_folds": 10,
    "validation_fraction": 0.05,
    "max_sweeps": 100,
    "conv_tol": 1e-8,
    "init_scale": 1.0,
    "refresh_interval": 25,
    "divergence_cap": 1e8,
    "max_ratings_per_user": None,
    "seed": 0,
}


def resolve_config(config, defaults, task):
    """Fill defaults and reject unknown keys."""
    unknown = sorted(set(config) - set(defaults) - {"task"})
    if unknown:
        raise ValueError(f"unknown {task} config keys: {', '.join(unknown)}")
    resolved = dict(defaults)
    resolved.update({k: v for k, v in config.items() if k != "task"})
    return resolved


def _noise_model(cfg):
    kind = cfg["noise"]
    if kind == "none" or cfg["sigma"] == 0:
        return NoiseModel.none()
    if kind == "gaussian":
        return NoiseModel.gaussian(cfg["sigma"])
    if kind == "bernoulli_gaussian":
        return NoiseModel.bernoulli_gaussian(cfg["sigma"], cfg["noise_p"])
    raise ValueError(f"noise must be none, gaussian or bernoulli_gaussian, got {kind!r}")


def _ensure_dirs(out_dir):
    runs = os.path.join(out_dir, "runs")
    os.makedirs(runs, exist_ok=True)
    return runs


def _stderr(values):
    if len(values) < 2:
        return float("nan")
    return float(np.std(values, ddof=1) / np.sqrt(len(values)))


def run_synth(config, out_dir, allow_failures=False):
    """Planted-instance study over (algorithm, col_degree, lam, gamma).

    Instances are shared across the grid (the graph seed depends only on
    col_degree and the instance index) so damping and mode comparisons
    are paired.
    """
    cfg = resolve_config(config, SYNTH_DEFAULTS, "synth")
    noise = _noise_model(cfg)
    runs_dir = _ensure_dirs(out_dir)
    n_rows = int(cfg["n_rows"])
    n_cols = int(round(cfg["aspect"] * n_rows))

    summary_rows = []
    failures = []
    curves = {}
    for c in cfg["col_degrees"]:
        for inst in range(cfg["instances"]):
            graph_seed = derive_seed(cfg["seed"], "graph", c, inst)
            graph, truth = generate_synthetic(
                n_rows, n_cols, cfg["rank"], noise, c, graph_seed)
            solver_seed = derive_seed(cfg["seed"], "solver", inst)
            for alg in cfg["algorithms"]:
                for lam in cfg["lams"]:
                    for gamma in cfg["gammas"]:
                        run_cfg = SolverConfig(
                            rank=cfg["rank"], lam=lam, gamma=gamma,
                            max_sweeps=cfg["max_sweeps"], conv_tol=cfg["conv_tol"],
                            init_scale=cfg["init_scale"], seed=solver_seed,
                            refresh_interval=cfg["refresh_interval"],
                            divergence_cap=cfg["divergence_cap"])
                        tag = f"{alg}_c{c}_lam{lam:g}_g{gamma:g}_i{inst}"
                        try:
                            res = run_algorithm(alg, graph, run_cfg,
                                                ground_truth=truth)
                        except (DivergenceError, SingularityError) as exc:
                            failures.append({"tag": tag, "error": str(exc)})
                            if not allow_failures:
                                raise
                            continue
                        meta = {"config": run_cfg.to_dict(), "algorithm": alg,
                                "col_degree": c, "instance": inst,
                                "graph_seed": graph_seed}
                        res.trace.to_csv(os.path.join(runs_dir, tag + ".csv"),
                                         meta=meta)
                        summary_rows.append({
                            "algorithm": alg, "col_degree": c, "lam": lam,
                            "gamma": gamma, "instance": inst,
                            "sweeps": res.sweeps,
                            "converged": int(res.converged),
                            "nrmse": res.trace.last("nrmse"),
                            "max_change": res.trace.last("max_change"),
                        })
                        if inst == 0:
                            curves[tag] = (res.trace.column("sweep"),
                                           res.trace.column("nrmse"))

    meta = {"config": cfg}
    write_csv(os.path.join(out_dir, "summary.csv"),
              ["algorithm", "col_degree", "lam", "gamma", "instance",
               "sweeps", "converged", "nrmse", "max_change"],
              summary_rows, meta=meta)

    aggregate_rows = []
    for alg in cfg["algorithms"]:
        for c in cfg["col_degrees"]:
            for lam in cfg["lams"]:
                for gamma in cfg["gammas"]:
                    vals = [r["nrmse"] for r in summary_rows
                            if r["algorithm"] == alg and r["col_degree"] == c
                            and r["lam"] == lam and r["gamma"] == gamma]
                    if not vals:
                        continue
                    aggregate_rows.append({
                        "algorithm": alg, "col_degree": c, "lam": lam,
                        "gamma": gamma, "n": len(vals),
                        "nrmse_mean": float(np.mean(vals)),
                        "nrmse_stderr": _stderr(vals),
                        "reconstruction_rate":
                            reconstruction_rate(vals, cfg["epsilon"]),
                    })
    write_csv(os.path.join(out_dir, "aggregate.csv"),
              ["algorithm", "col_degree", "lam", "gamma", "n",
               "nrmse_mean", "nrmse_stderr", "reconstruction_rate"],
              aggregate_rows, meta=meta)

    if curves:
        save_trace_curves(os.path.join(out_dir, "nrmse_vs_sweep.svg"), curves,
                          ylabel="nrmse", title="reconstruction error per sweep")
    _synth_summary_figures(cfg, aggregate_rows, out_dir)

    summary = {
        "task": "synth", "config": cfg, "runs": len(summary_rows),
        "failures": failures, "aggregate": aggregate_rows,
    }
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return summary


def _synth_summary_figures(cfg, aggregate_rows, out_dir):
    if len(cfg["col_degrees"]) > 1 and len(cfg["gammas"]) > 1:
        # phase picture: success rate over the (col_degree, gamma) plane
        for alg in cfg["algorithms"]:
            grid = [[next((r["reconstruction_rate"] for r in aggregate_rows
                           if r["algorithm"] == alg and r["col_degree"] == c
                           and r["gamma"] == g), float("nan"))
                     for c in cfg["col_degrees"]]
                    for g in cfg["gammas"]]
            save_heatmap(os.path.join(out_dir, f"rate_{alg}.svg"),
                         cfg["col_degrees"], cfg["gammas"], grid,
                         xlabel="col_degree", ylabel="gamma",
                         value_label=f"reconstruction rate (eps={cfg['epsilon']:g})",
                         title=alg)
        return
    if len(cfg["col_degrees"]) > 1:
        axis, key = "col_degree", "col_degrees"
    elif len(cfg["gammas"]) > 1:
        axis, key = "gamma", "gammas"
    else:
        axis, key = "lam", "lams"
    series = {}
    for alg in cfg["algorithms"]:
        rows = [r for r in aggregate_rows if r["algorithm"] == alg]
        groups = {}
        for r in rows:
            label = alg
            for other in ("col_degree", "gamma", "lam"):
                if other != axis and len(cfg[{"col_degree": "col_degrees",
                                              "gamma": "gammas",
                                              "lam": "lams"}[other]]) > 1:
                    label += f" {other}={r[other]:g}"
            groups.setdefault(label, []).append(r)
        for label, rws in groups.items():
            rws.sort(key=lambda r: r[axis])
            series[label] = ([r[axis] for r in rws],
                             [r["nrmse_mean"] for r in rws],
                             [r["nrmse_stderr"] for r in rws])
    if series:
        save_errorbars(os.path.join(out_dir, "final_nrmse.svg"), series,
                       xlabel=axis, ylabel="final nrmse", logy=True)


def run_pd(config, out_dir, allow_failures=False):
    """Population-dynamics study over (mode, gamma, d_v, lam)."""
    cfg = resolve_config(config, PD_DEFAULTS, "pd")
    noise = _noise_model(cfg)
    runs_dir = _ensure_dirs(out_dir)

    summary_rows = []
    failures = []
    curves = {}
    for mode in cfg["modes"]:
        for gamma in cfg["gammas"]:
            for d_v in cfg["d_vs"]:
                d_u = int(round(cfg["aspect"] * d_v))
                for lam in cfg["lams"]:
                    pd_cfg = PDConfig(
                        rank=cfg["rank"], lam=lam, d_u=d_u, d_v=d_v,
                        noise=noise, mode=mode, n_pop=cfg["n_pop"],
                        gamma=gamma,
                        seed=derive_seed(cfg["seed"], "pd", mode, gamma, d_v, lam),
                        init_noise=cfg["init_noise"],
                        random_init=cfg["random_init"],
                        max_sweeps=cfg["max_sweeps"],
                        burn_in_window=cfg["burn_in_window"],
                        burn_in_rtol=cfg["burn_in_rtol"],
                        monitor_samples=cfg["monitor_samples"],
                        readout_samples=cfg["readout_samples"])
                    tag = f"pd_{mode}_dv{d_v}_lam{lam:g}_g{gamma:g}"
                    try:
                        res = pd_run(pd_cfg)
                    except SingularityError as exc:
                        failures.append({"tag": tag, "error": str(exc)})
                        if not allow_failures:
                            raise
                        continue
                    meta = {"mode": mode, "gamma": gamma, "d_u": d_u,
                            "d_v": d_v, "lam": lam, "n_pop": cfg["n_pop"],
                            "seed": pd_cfg.seed}
                    res.trace.to_csv(os.path.join(runs_dir, tag + ".csv"),
                                     meta=meta)
                    summary_rows.append({
                        "mode": mode, "gamma": gamma, "d_v": d_v, "d_u": d_u,
                        "lam": lam, "readout_nrmse": res.readout,
                        "sweeps": res.sweeps, "converged": int(res.converged),
                    })
                    curves[tag] = (res.trace.column("sweep"),
                                   res.trace.column("readout_nrmse"))

    meta = {"config": cfg}
    write_csv(os.path.join(out_dir, "summary.csv"),
              ["mode", "gamma", "d_v", "d_u", "lam", "readout_nrmse",
               "sweeps", "converged"],
              summary_rows, meta=meta)
    if curves:
        save_trace_curves(os.path.join(out_dir, "readout_vs_sweep.svg"), curves,
                          ylabel="readout nrmse",
                          title="population readout per sweep")
    if len(cfg["d_vs"]) > 1:
        series = {}
        for mode in cfg["modes"]:
            for gamma in cfg["gammas"]:
                for lam in cfg["lams"]:
                    rows = sorted((r for r in summary_rows
                                   if r["mode"] == mode and r["gamma"] == gamma
                                   and r["lam"] == lam),
                                  key=lambda r: r["d_v"])
                    if rows:
                        label = f"{mode} lam={lam:g} gamma={gamma:g}"
                        series[label] = ([r["d_v"] for r in rows],
                                         [r["readout_nrmse"] for r in rows],
                                         [float("nan")] * len(rows))
        save_errorbars(os.path.join(out_dir, "readout_vs_degree.svg"), series,
                       xlabel="d_v", ylabel="readout nrmse", logy=True)

    summary = {"task": "pd", "config": cfg, "runs": len(summary_rows),
               "failures": failures, "results": summary_rows}
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return summary


def run_realdata(config, out_dir, allow_failures=False):
    """Nested cross-validation on a ratings file."""
    cfg = resolve_config(config, REALDATA_DEFAULTS, "realdata")
    if not cfg["path"]:
        raise ValueError("realdata config needs a ratings file path")
    graph = load_ratings(cfg["path"], format=cfg["format"])
    if cfg["max_ratings_per_user"]:
        graph = sparsify_by_user(graph, cfg["max_ratings_per_user"])
    lam_grid = geometric_lambda_grid(cfg["lam_low"], cfg["lam_high"],
                                     cfg["lam_num"])
    base = SolverConfig(
        rank=cfg["rank"], lam=float(lam_grid[0]), gamma=cfg["gamma"],
        max_sweeps=cfg["max_sweeps"], conv_tol=cfg["conv_tol"],
        init_scale=cfg["init_scale"], seed=cfg["seed"],
        refresh_interval=cfg["refresh_interval"],
        divergence_cap=cfg["divergence_cap"])

    all_rows = []
    fold_rows = []
    summaries = {}
    failures = []
    for alg in cfg["algorithms"]:
        try:
            result = nested_cv(graph, lam_grid, base, k=cfg["k_folds"],
                               validation_fraction=cfg["validation_fraction"],
                               algorithm=alg)
        except RuntimeError as exc:
            failures.append({"algorithm": alg, "error": str(exc)})
            if not allow_failures:
                raise
            continue
        all_rows.extend(result.rows)
        for s in result.fold_summaries:
            fold_rows.append({"algorithm": alg, **s})
        summaries[alg] = result.summary()
        failures.extend({"algorithm": alg, **f} for f in result.failures)

    meta = {"config": {k: v for k, v in cfg.items()}}
    write_csv(os.path.join(out_dir, "rows.csv"),
              ["algorithm", "fold", "lambda", "sweep", "rmse_validation",
               "rmse_test"],
              all_rows, meta=meta)
    write_csv(os.path.join(out_dir, "folds.csv"),
              ["algorithm", "fold", "lambda", "rmse_validation",
               "rmse_test_terminal", "rmse_test_best_sweep", "best_sweep"],
              fold_rows, meta=meta)

    series = {}
    for alg in cfg["algorithms"]:
        by_lam = {}
        for row in all_rows:
            if row["algorithm"] != alg or row["rmse_validation"] is None:
                continue
            by_lam.setdefault(row["lambda"], {})[(row["fold"], row["sweep"])] = row
        xs, means, errs = [], [], []
        for lam in sorted(by_lam):
            cells = by_lam[lam]
            last_sweep = {}
            for (fold, sweep), row in cells.items():
                if fold not in last_sweep or sweep > last_sweep[fold][0]:
                    last_sweep[fold] = (sweep, row["rmse_validation"])
            vals = [v for _, v in last_sweep.values()]
            xs.append(lam)
            means.append(float(np.mean(vals)))
            errs.append(_stderr(vals))
        if xs:
            series[alg] = (xs, means, errs)
    if series:
        save_errorbars(os.path.join(out_dir, "validation_vs_lambda.svg"), series,
                       xlabel="lambda", ylabel="terminal validation rmse")

    summary = {"task": "realdata", "config": cfg, "failures": failures,
               "algorithms": summaries,
               "n_edges": graph.n_edges, "n_rows": graph.n_rows,
               "n_cols": graph.n_cols}
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return summary


def _check_quadrature():
    """Single-message posterior moments: quadrature vs closed form."""
    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(rng.standard_normal((2, 2)))
    c_mat = q @ np.diag([5.0, 40.0]) @ q.T
    v_star_in = rng.standard_normal(2)
    v_star_in /= np.linalg.norm(v_star_in)
    d_vec = c_mat @ v_star_in
    y, beta, eps_reg = 1.3, 1e4, 1e-3
    mean, cov = quadrature_moments(c_mat, d_vec, y, beta, eps_reg)
    c_inv = np.linalg.inv(c_mat)
    v_star = c_inv @ d_vec
    al = alpha_from(v_star, c_inv)
    mean_ref = (y / float(v_star @ v_star)) * v_star
    cov_ref = np.linalg.inv(beta * (eps_reg * np.eye(2)
                                    + np.outer(v_star, v_star) / (1 + y * y * al)))
    err_mean = np.max(np.abs(mean - mean_ref)) / np.max(np.abs(mean_ref))
    err_cov = np.max(np.abs(cov - cov_ref)) / np.max(np.abs(cov_ref))
    ok = err_mean < 1e-2 and err_cov < 5e-2
    return ok, f"mean rel err {err_mean:.2e}, cov rel err {err_cov:.2e}"


def _check_planted_fixed_point():
    """Noiseless planted factors are a solver fixed point."""
    graph, truth = generate_synthetic(24, 48, 3, NoiseModel.none(), 10, seed=5)
    cfg = SolverConfig(rank=3, lam=0.0, mode="alsmp", max_sweeps=5,
                       conv_tol=1e-10, seed=5)
    res = run_algorithm("alsmp", graph, cfg, ground_truth=truth,
                        planted_init=True)
    val = res.trace.last("nrmse")
    return res.converged and val < 1e-10, f"nrmse {val:.2e}"


def _check_zero_alpha_reductions():
    """Variance-corrected solvers with the correction forced off equal
    the uncorrected ones bitwise, in both solver families."""
    graph, truth = generate_synthetic(16, 32, 2, NoiseModel.gaussian(0.2), 6,
                                      seed=11)
    cfg = SolverConfig(rank=2, lam=0.5, max_sweeps=6, conv_tol=1e-300, seed=11)
    details = []
    ok = True
    for fam in ("", "approx"):
        forced = run_algorithm(fam + "gpbp", graph,
                               cfg.replace(force_zero_alpha=True),
                               ground_truth=truth)
        plain = run_algorithm(fam + "alsmp", graph, cfg, ground_truth=truth)
        same = (np.array_equal(forced.u_hat, plain.u_hat)
                and np.array_equal(forced.v_hat, plain.v_hat))
        ok = ok and same
        details.append(f"{fam or 'exact'}: {'equal' if same else 'DIFFER'}")
    pd_base = PDConfig(rank=2, lam=0.1, d_u=6, d_v=6,
                       noise=NoiseModel.gaussian(0.1), n_pop=150, seed=4,
                       max_sweeps=8, monitor_samples=500, readout_samples=500)
    forced = pd_run(pd_base.replace(mode="gpbp", force_zero_alpha=True))
    plain = pd_run(pd_base.replace(mode="alsmp"))
    same = forced.readout == plain.readout
    ok = ok and same
    details.append(f"pd: {'equal' if same else 'DIFFER'}")
    return ok, "; ".join(details)


def _dense_instance():
    graph, truth = generate_synthetic(30, 30, 3, NoiseModel.none(), 30, seed=0)
    y_full = np.zeros((30, 30))
    y_full[graph.rows, graph.cols] = graph.values
    return graph, truth, y_full


def _check_nuclear_shrinkage():
    """Factored ridge optimum equals the nuclear-norm optimum.

    On fully observed data the ridge-factored objective at its global
    minimum matches 1/2||Y-X||_F^2 + lam ||X||_* at the soft-thresholded
    X, and the singular values coincide.
    """
    graph, _, y_full = _dense_instance()
    lam = 0.5
    x_star = svt_solution(y_full, lam)
    sv_star = np.linalg.svd(x_star, compute_uv=False)
    obj_star = (0.5 * np.linalg.norm(y_full - x_star) ** 2
                + lam * sv_star.sum())
    oracle = alt_min_oracle(graph, lam, rank=5, seed=1)
    sv_alt = np.linalg.svd(oracle.u_hat @ oracle.v_hat.T, compute_uv=False)
    rel_obj = abs(oracle.objective - obj_star) / obj_star
    rel_sv = np.max(np.abs(sv_alt - sv_star)) / sv_star[0]
    ok = rel_obj < 1e-6 and rel_sv < 1e-6
    return ok, f"objective rel gap {rel_obj:.2e}, singular rel gap {rel_sv:.2e}"


def _check_dense_solver_optimum():
    """Dense message passing lands near the convex optimum.

    The cavity fixed point sits O(lam/degree) away from the batch
    minimizer, so the tolerances here scale with 1/30.
    """
    graph, truth, y_full = _dense_instance()
    lam = 0.5
    sv_star = np.linalg.svd(svt_solution(y_full, lam), compute_uv=False)
    oracle = alt_min_oracle(graph, lam, rank=5, seed=1)
    cfg = SolverConfig(rank=5, lam=lam, max_sweeps=400, conv_tol=1e-10, seed=3)
    res = run_algorithm("gpbp", graph, cfg, ground_truth=truth)
    obj = completion_objective(graph, lam, res.u_hat, res.v_hat)
    sv = np.linalg.svd(res.u_hat @ res.v_hat.T, compute_uv=False)
    rel_obj = abs(obj - oracle.objective) / oracle.objective
    rel_sv = np.max(np.abs(sv[:3] - sv_star[:3]) / sv_star[:3])
    ok = rel_obj < 1e-3 and rel_sv < 1e-2
    return ok, f"objective rel gap {rel_obj:.2e}, singular rel gap {rel_sv:.2e}"


def _check_full_damping_freeze():
    """gamma = 1 repeats the previous messages exactly."""
    graph, _ = generate_synthetic(12, 24, 2, NoiseModel.gaussian(0.1), 4,
                                  seed=31)
    cfg = SolverConfig(rank=2, lam=0.2, gamma=1.0, seed=31)
    state = init_state(graph, cfg)
    state.sweep = 1
    half_sweep(state, graph, cfg, "u")
    half_sweep(state, graph, cfg, "v")
    first_u = state.u_mean.copy()
    state.sweep = 2
    half_sweep(state, graph, cfg, "u")
    same = np.array_equal(state.u_mean, first_u)
    return same, "second sweep bitwise equal" if same else "messages moved"


def _check_pd_fixed_point():
    """Noiseless planted population is a dynamics fixed point."""
    cfg = PDConfig(rank=3, lam=0.0, d_u=8, d_v=8, noise=NoiseModel.none(),
                   n_pop=150, seed=2, init_noise=0.0, max_sweeps=20,
                   monitor_samples=500, readout_samples=2000)
    res = pd_run(cfg)
    return res.readout < 1e-8, f"readout {res.readout:.2e}"


VERIFY_CHECKS = [
    ("quadrature_moments", _check_quadrature),
    ("planted_fixed_point", _check_planted_fixed_point),
    ("zero_alpha_reductions", _check_zero_alpha_reductions),
    ("nuclear_norm_shrinkage", _check_nuclear_shrinkage),
    ("dense_solver_optimum", _check_dense_solver_optimum),
    ("full_damping_freeze", _check_full_damping_freeze),
    ("pd_fixed_point", _check_pd_fixed_point),
]


def verify_battery():
    """Run the cross-implementation sanity checks.

    Returns a list of (name, passed, detail) tuples.  Each check compares
    a solver output against an independent route to the same quantity.
    """
    results = []
    for name, fn in VERIFY_CHECKS:
        try:
            passed, detail = fn()
        except Exception as exc:
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(passed), detail))
    return results


TASKS = {"synth": run_synth, "pd": run_pd, "realdata": run_realdata}


def run_experiment(config, out_dir, allow_failures=False):
    task = config.get("task")
    if task not in TASKS:
        raise ValueError(f"config task must be one of {sorted(TASKS)}, got {task!r}")
    os.makedirs(out_dir, exist_ok=True)
    return TASKS[task](config, out_dir, allow_failures=allow_failures)
