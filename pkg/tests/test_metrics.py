"""Tests for the reconstruction metrics."""

import numpy as np
import pytest

from gpbp.metrics import nrmse, reconstruction_rate, rmse_on_edges
from gpbp.obsgraph import GroundTruth, ObservationGraph


def test_nrmse_zero_for_exact_factors():
    rng = np.random.default_rng(0)
    u0 = rng.standard_normal((7, 3))
    v0 = rng.standard_normal((11, 3))
    assert nrmse(u0, v0, GroundTruth(u0, v0)) == pytest.approx(0.0, abs=1e-14)


def test_nrmse_unit_for_sign_matrix():
    # X0 entries are all +-1 at rank 1, so a zero estimate scores exactly 1.
    truth = GroundTruth(np.array([[1.0], [-1.0]]), np.array([[1.0], [1.0]]))
    z = np.zeros((2, 1))
    assert nrmse(z, z, truth) == pytest.approx(1.0, abs=1e-14)


def test_nrmse_zero_estimate_matches_closed_form():
    rng = np.random.default_rng(1)
    n, m, r = 9, 13, 4
    truth = GroundTruth(rng.standard_normal((n, r)), rng.standard_normal((m, r)))
    x0 = truth.u0 @ truth.v0.T
    expected = np.sqrt((x0 * x0).sum() / (n * m * r))
    got = nrmse(np.zeros((n, r)), np.zeros((m, r)), truth)
    assert got == pytest.approx(expected, rel=1e-12)


def test_nrmse_invariant_under_factor_rotation():
    # u @ v.T is unchanged by u -> u Q, v -> v Q^-T, so the score must be too.
    rng = np.random.default_rng(2)
    n, m, r = 20, 15, 5
    truth = GroundTruth(rng.standard_normal((n, r)), rng.standard_normal((m, r)))
    u = rng.standard_normal((n, r))
    v = rng.standard_normal((m, r))
    q, _ = np.linalg.qr(rng.standard_normal((r, r)))
    base = nrmse(u, v, truth)
    rotated = nrmse(u @ q, v @ np.linalg.inv(q).T, truth)
    assert rotated == pytest.approx(base, rel=1e-10)


def _graph_from_entries(n, m, entries):
    rows = np.array([e[0] for e in entries], dtype=np.int64)
    cols = np.array([e[1] for e in entries], dtype=np.int64)
    vals = np.array([e[2] for e in entries], dtype=np.float64)
    return ObservationGraph(n, m, rows, cols, vals)


def test_rmse_on_edges_exact_predictions():
    rng = np.random.default_rng(3)
    u = rng.standard_normal((4, 2))
    v = rng.standard_normal((5, 2))
    entries = [(0, 0, float(u[0] @ v[0])), (3, 4, float(u[3] @ v[4])), (1, 2, float(u[1] @ v[2]))]
    g = _graph_from_entries(4, 5, entries)
    assert rmse_on_edges(u, v, g) == pytest.approx(0.0, abs=1e-14)


def test_rmse_on_edges_single_edge():
    u = np.array([[3.0]])
    v = np.array([[1.0]])
    g = _graph_from_entries(1, 1, [(0, 0, 4.0)])
    assert rmse_on_edges(u, v, g) == pytest.approx(1.0, rel=1e-14)


def test_rmse_on_edges_clipping():
    # Prediction 7.2 clipped to 5 against target 5 leaves no residual.
    u = np.array([[7.2]])
    v = np.array([[1.0]])
    g = _graph_from_entries(1, 1, [(0, 0, 5.0)])
    assert rmse_on_edges(u, v, g, clip=(1.0, 5.0)) == pytest.approx(0.0, abs=1e-14)
    assert rmse_on_edges(u, v, g) == pytest.approx(2.2, rel=1e-14)


def test_rmse_on_edges_accepts_triple():
    u = np.array([[2.0]])
    v = np.array([[1.0], [1.0]])
    rows = np.array([0, 0], dtype=np.int64)
    cols = np.array([0, 1], dtype=np.int64)
    vals = np.array([1.0, 3.0])
    got = rmse_on_edges(u, v, (rows, cols, vals))
    assert got == pytest.approx(1.0, rel=1e-14)


def test_rmse_on_edges_empty_rejected():
    u = np.array([[1.0]])
    v = np.array([[1.0]])
    rows = np.array([], dtype=np.int64)
    cols = np.array([], dtype=np.int64)
    vals = np.array([])
    with pytest.raises(ValueError):
        rmse_on_edges(u, v, (rows, cols, vals))


def test_reconstruction_rate_counts_strictly_below():
    vals = np.array([0.005, 0.02, 0.009])
    assert reconstruction_rate(vals, 0.01) == pytest.approx(2.0 / 3.0)
    assert reconstruction_rate(np.array([0.01, 0.02]), 0.01) == 0.0
    assert reconstruction_rate(np.array([0.0099999]), 0.01) == 1.0


def test_reconstruction_rate_monotone_in_epsilon():
    rng = np.random.default_rng(4)
    vals = rng.uniform(0.0, 0.1, size=50)
    eps = np.linspace(0.001, 0.1, 25)
    rates = [reconstruction_rate(vals, e) for e in eps]
    assert all(b >= a for a, b in zip(rates, rates[1:]))


def test_reconstruction_rate_empty_rejected():
    with pytest.raises(ValueError):
        reconstruction_rate(np.array([]), 0.01)
