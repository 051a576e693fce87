"""Edge-message solvers: GPBP and its alternating-least-squares mode.

Messages live on directed edges (node -> observation).  A sweep updates
all U-side messages from a snapshot of the V side, then all V-side
messages from the just-updated U side.  Previous-sweep messages are
kept so damping can mix contribution terms across generations.
"""

import numpy as np

from . import _kernels
from .errors import DivergenceError, SingularityError
from .metrics import nrmse, rmse_on_edges
from .trace import Trace


class SolverState:
    """Message and node-state buffers for one run.

    Message arrays are indexed by edge id and come in three rotating
    generations (current, previous, scratch); rotation after a
    half-sweep makes the freshly written scratch current and demotes
    the old current to previous.
    """

    def __init__(self, graph, rank):
        n_edges = graph.n_edges
        self.u_mean = np.zeros((n_edges, rank))
        self.u_alpha = np.zeros(n_edges)
        self.u_mean_prev = np.zeros((n_edges, rank))
        self.u_alpha_prev = np.zeros(n_edges)
        self.u_mean_scratch = np.zeros((n_edges, rank))
        self.u_alpha_scratch = np.zeros(n_edges)
        self.v_mean = np.zeros((n_edges, rank))
        self.v_alpha = np.zeros(n_edges)
        self.v_mean_prev = np.zeros((n_edges, rank))
        self.v_alpha_prev = np.zeros(n_edges)
        self.v_mean_scratch = np.zeros((n_edges, rank))
        self.v_alpha_scratch = np.zeros(n_edges)

        self.u_node_mean = np.zeros((graph.n_rows, rank))
        self.u_node_field = np.zeros((graph.n_rows, rank))
        self.u_node_prec = np.zeros((graph.n_rows, rank, rank))
        self.u_node_inv = np.zeros((graph.n_rows, rank, rank))
        self.u_node_alpha = np.zeros(graph.n_rows)
        self.v_node_mean = np.zeros((graph.n_cols, rank))
        self.v_node_field = np.zeros((graph.n_cols, rank))
        self.v_node_prec = np.zeros((graph.n_cols, rank, rank))
        self.v_node_inv = np.zeros((graph.n_cols, rank, rank))
        self.v_node_alpha = np.zeros(graph.n_cols)

        self.sweep = 0
        self.n_fallback = 0

    def rotate(self, side):
        if side == "u":
            self.u_mean_scratch, self.u_mean, self.u_mean_prev = (
                self.u_mean_prev,
                self.u_mean_scratch,
                self.u_mean,
            )
            self.u_alpha_scratch, self.u_alpha, self.u_alpha_prev = (
                self.u_alpha_prev,
                self.u_alpha_scratch,
                self.u_alpha,
            )
        else:
            self.v_mean_scratch, self.v_mean, self.v_mean_prev = (
                self.v_mean_prev,
                self.v_mean_scratch,
                self.v_mean,
            )
            self.v_alpha_scratch, self.v_alpha, self.v_alpha_prev = (
                self.v_alpha_prev,
                self.v_alpha_scratch,
                self.v_alpha,
            )


def init_state(graph, config, planted=None):
    """Random (or planted) edge means, alphas zero, prev = current.

    With planted ground truth, every message leaving node i starts at
    the planted factor row, which puts noiseless instances at a fixed
    point.  U-side means are drawn before V-side means.
    """
    config.validate()
    state = SolverState(graph, config.rank)
    if planted is not None:
        state.u_mean[:] = planted.u0[graph.rows]
        state.v_mean[:] = planted.v0[graph.cols]
    else:
        rng = np.random.default_rng(config.seed)
        if config.init_scale > 0:
            state.u_mean[:] = config.init_scale * rng.standard_normal(state.u_mean.shape)
            state.v_mean[:] = config.init_scale * rng.standard_normal(state.v_mean.shape)
    state.u_mean_prev[:] = state.u_mean
    state.v_mean_prev[:] = state.v_mean
    return state


def half_sweep(state, graph, config, side, direct_inverse=True):
    """Update one side's messages and node states in place."""
    if side == "u":
        args = (
            graph.row_ptr,
            graph.row_order,
            graph.values,
            state.v_mean,
            state.v_alpha,
            state.v_mean_prev,
            state.v_alpha_prev,
            state.u_mean_scratch,
            state.u_alpha_scratch,
            state.u_node_mean,
            state.u_node_field,
            state.u_node_prec,
            state.u_node_inv,
            state.u_node_alpha,
        )
    elif side == "v":
        args = (
            graph.col_ptr,
            graph.col_order,
            graph.values,
            state.u_mean,
            state.u_alpha,
            state.u_mean_prev,
            state.u_alpha_prev,
            state.v_mean_scratch,
            state.v_alpha_scratch,
            state.v_node_mean,
            state.v_node_field,
            state.v_node_prec,
            state.v_node_inv,
            state.v_node_alpha,
        )
    else:
        raise ValueError(f"side must be 'u' or 'v', got {side!r}")

    status, node, n_fallback = _kernels.exact_half_sweep(
        *args,
        config.lam,
        config.gamma,
        config.use_alpha,
        direct_inverse,
        config.divergence_cap,
    )
    state.n_fallback += n_fallback
    if status == 1:
        raise DivergenceError(
            f"divergence at sweep {state.sweep}, side {side}, node {node}"
        )
    if status == 2:
        raise SingularityError(
            f"singular precision at sweep {state.sweep}, side {side}, node {node}"
        )
    state.rotate(side)
    if config.force_zero_alpha or not config.use_alpha:
        if side == "u":
            state.u_alpha[:] = 0.0
        else:
            state.v_alpha[:] = 0.0
    return state


def max_relative_change(prev_mean, cur_mean, degrees):
    """Convergence metric: worst relative mean change over observed nodes."""
    mask = degrees > 0
    if not mask.any():
        return 0.0
    num = np.abs(cur_mean[mask] - prev_mean[mask]).max(axis=1)
    den = 1.0 + np.abs(cur_mean[mask]).max(axis=1)
    return float((num / den).max())


def inverse_drift(state, graph):
    """Worst-case ||A A_inv - I||_max over observed nodes on both sides."""
    worst = 0.0
    eye = np.eye(state.u_node_prec.shape[1])
    for prec, inv, deg in (
        (state.u_node_prec, state.u_node_inv, graph.row_degrees),
        (state.v_node_prec, state.v_node_inv, graph.col_degrees),
    ):
        mask = deg > 0
        if mask.any():
            resid = prec[mask] @ inv[mask] - eye
            worst = max(worst, float(np.abs(resid).max()))
    return worst


class RunResult:
    def __init__(self, u_hat, v_hat, trace, converged, sweeps, state):
        self.u_hat = u_hat
        self.v_hat = v_hat
        self.trace = trace
        self.converged = converged
        self.sweeps = sweeps
        self.state = state


def run(graph, config, ground_truth=None, test_edges=None, validation_edges=None,
        planted_init=False):
    """Alternate U/V half-sweeps until the posterior means settle.

    The trace records sweep, max_change, and (when ground_truth,
    validation_edges or test_edges are given) nrmse, rmse_validation
    and rmse_test per sweep.  Divergence aborts with the partial trace
    attached to the exception.
    """
    config.validate()
    if planted_init and ground_truth is None:
        raise ValueError("planted_init requires ground_truth")
    state = init_state(graph, config, planted=ground_truth if planted_init else None)

    columns = ["sweep", "max_change"]
    if ground_truth is not None:
        columns.append("nrmse")
    if validation_edges is not None:
        columns.append("rmse_validation")
    if test_edges is not None:
        columns.append("rmse_test")
    trace = Trace(columns)

    always_direct = config.lam < 1e-8 or config.refresh_interval <= 1
    prev_u = state.u_node_mean.copy()
    prev_v = state.v_node_mean.copy()
    converged = False
    sweeps_done = 0
    for sweep in range(1, config.max_sweeps + 1):
        state.sweep = sweep
        direct = always_direct or (sweep - 1) % config.refresh_interval == 0
        try:
            half_sweep(state, graph, config, "u", direct_inverse=direct)
            half_sweep(state, graph, config, "v", direct_inverse=direct)
        except (DivergenceError, SingularityError) as exc:
            exc.trace = trace
            raise
        change = max(
            max_relative_change(prev_u, state.u_node_mean, graph.row_degrees),
            max_relative_change(prev_v, state.v_node_mean, graph.col_degrees),
        )
        row = {"sweep": sweep, "max_change": change}
        if ground_truth is not None:
            row["nrmse"] = nrmse(state.u_node_mean, state.v_node_mean, ground_truth)
        if validation_edges is not None:
            row["rmse_validation"] = rmse_on_edges(
                state.u_node_mean, state.v_node_mean, validation_edges
            )
        if test_edges is not None:
            row["rmse_test"] = rmse_on_edges(state.u_node_mean, state.v_node_mean, test_edges)
        trace.add_row(**row)
        prev_u[:] = state.u_node_mean
        prev_v[:] = state.v_node_mean
        sweeps_done = sweep
        if change < config.conv_tol:
            converged = True
            break

    return RunResult(
        u_hat=state.u_node_mean.copy(),
        v_hat=state.v_node_mean.copy(),
        trace=trace,
        converged=converged,
        sweeps=sweeps_done,
        state=state,
    )
