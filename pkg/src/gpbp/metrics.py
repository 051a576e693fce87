"""Reconstruction metrics and aggregation helpers."""

import numpy as np


def nrmse(u_hat, v_hat, truth):
    """Normalized RMSE against the planted matrix over all N*M entries.

    ``sqrt( ||U0 V0' - U V'||_F^2 / (N M R) )``, accumulated over row
    blocks so residuals are formed entry-wise before squaring (an R x R
    Gram arrangement is cheaper but loses the small-residual regime to
    cancellation) and no full dense product is materialized.
    """
    u0, v0 = truth.u0, truth.v0
    n, rank = u0.shape
    m = v0.shape[0]
    block = max(1, int(2**20 // max(m, 1)))
    total = 0.0
    for start in range(0, n, block):
        stop = min(start + block, n)
        resid = u0[start:stop] @ v0.T - u_hat[start:stop] @ v_hat.T
        total += float(np.einsum("ij,ij->", resid, resid))
    return float(np.sqrt(total / (n * m * rank)))


def rmse_on_edges(u_hat, v_hat, edges, clip=None):
    """RMSE of predictions on a set of held-out edges.

    Parameters
    ----------
    edges : ObservationGraph or (rows, cols, values) triple
        Must be nonempty.
    clip : (low, high), optional
        Clip predictions into the rating range before scoring (off by
        default).
    """
    if hasattr(edges, "rows"):
        rows, cols, values = edges.rows, edges.cols, edges.values
    else:
        rows, cols, values = edges
    rows = np.asarray(rows)
    if rows.size == 0:
        raise ValueError("rmse_on_edges requires at least one edge")
    pred = np.sum(u_hat[rows] * v_hat[np.asarray(cols)], axis=1)
    if clip is not None:
        pred = np.clip(pred, clip[0], clip[1])
    resid = np.asarray(values) - pred
    return float(np.sqrt(np.mean(resid * resid)))


def reconstruction_rate(nrmse_values, epsilon):
    """Fraction of instances with nrmse strictly below ``epsilon``."""
    values = np.asarray(list(nrmse_values), dtype=float)
    if values.size == 0:
        raise ValueError("reconstruction_rate requires at least one value")
    return float(np.mean(values < epsilon))
