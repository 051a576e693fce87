"""Observation graphs for matrix completion.

An :class:`ObservationGraph` stores the bipartite pattern of observed
entries of an ``n_rows x n_cols`` matrix as a flat edge list together with
row/column adjacency indices.  The module also provides

* degree-regular mask sampling (``c`` observations per column,
  ``r = c * n_cols / n_rows`` per row),
* synthetic low-rank instance generation with configurable noise,
* MovieLens-style ratings loading with user/item reindexing,
* sparse-user filtering and k-fold edge splits for cross-validation,
* plain-text serialization of instances.
"""

import csv
import warnings
from dataclasses import dataclass

import numpy as np


class ObservationGraph:
    """Bipartite graph of observed matrix entries.

    Parameters
    ----------
    n_rows, n_cols : int
        Matrix dimensions.
    rows, cols : array_like of int, shape (E,)
        Endpoints of each observed entry.  Duplicate ``(row, col)`` pairs
        are rejected.
    values : array_like of float, shape (E,), optional
        Observed values ``y``.  Defaults to zeros (mask-only graph).
    row_labels, col_labels : array_like, optional
        Original identifiers (e.g. MovieLens user/movie ids) kept after
        reindexing; ``row_labels[i]`` is the external id of row ``i``.
    """

    def __init__(self, n_rows, n_cols, rows, cols, values=None,
                 row_labels=None, col_labels=None):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.rows = np.ascontiguousarray(rows, dtype=np.int64)
        self.cols = np.ascontiguousarray(cols, dtype=np.int64)
        if values is None:
            values = np.zeros(self.rows.size)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        self.row_labels = None if row_labels is None else np.asarray(row_labels)
        self.col_labels = None if col_labels is None else np.asarray(col_labels)
        self._validate()
        # CSR-style grouping used by the sweep kernels: edge ids sorted by
        # row (resp. col) with segment boundaries per node.
        self.row_order = np.argsort(self.rows, kind="stable").astype(np.int64)
        self.col_order = np.argsort(self.cols, kind="stable").astype(np.int64)
        self.row_ptr = _segment_ptr(self.rows[self.row_order], self.n_rows)
        self.col_ptr = _segment_ptr(self.cols[self.col_order], self.n_cols)

    def _validate(self):
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValueError("matrix dimensions must be nonnegative")
        if not (self.rows.shape == self.cols.shape == self.values.shape):
            raise ValueError("rows, cols and values must have equal length")
        if self.n_edges:
            if self.rows.min() < 0 or self.rows.max() >= self.n_rows:
                raise ValueError("row index out of range")
            if self.cols.min() < 0 or self.cols.max() >= self.n_cols:
                raise ValueError("col index out of range")
            key = self.rows * self.n_cols + self.cols
            if np.unique(key).size != key.size:
                raise ValueError("duplicate (row, col) observation")
        if self.row_labels is not None and self.row_labels.size != self.n_rows:
            raise ValueError("row_labels length must equal n_rows")
        if self.col_labels is not None and self.col_labels.size != self.n_cols:
            raise ValueError("col_labels length must equal n_cols")

    @property
    def n_edges(self):
        return self.rows.size

    @property
    def row_degrees(self):
        return np.diff(self.row_ptr)

    @property
    def col_degrees(self):
        return np.diff(self.col_ptr)

    def row_adjacency(self):
        """List of edge-id arrays incident to each row."""
        return [self.row_order[self.row_ptr[i]:self.row_ptr[i + 1]]
                for i in range(self.n_rows)]

    def col_adjacency(self):
        """List of edge-id arrays incident to each column."""
        return [self.col_order[self.col_ptr[j]:self.col_ptr[j + 1]]
                for j in range(self.n_cols)]

    def subgraph(self, edge_ids):
        """Graph on the same node sets restricted to ``edge_ids``."""
        edge_ids = np.asarray(edge_ids, dtype=np.int64)
        return ObservationGraph(self.n_rows, self.n_cols,
                                self.rows[edge_ids], self.cols[edge_ids],
                                self.values[edge_ids],
                                self.row_labels, self.col_labels)

    def with_values(self, values):
        """Same pattern with replaced observation values."""
        return ObservationGraph(self.n_rows, self.n_cols, self.rows,
                                self.cols, values, self.row_labels,
                                self.col_labels)


def _segment_ptr(sorted_nodes, n_nodes):
    counts = np.bincount(sorted_nodes, minlength=n_nodes)
    ptr = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return ptr


@dataclass(frozen=True)
class GroundTruth:
    """Planted factors of a synthetic instance (entries i.i.d. N(0, 1))."""

    u0: np.ndarray
    v0: np.ndarray

    @property
    def rank(self):
        return self.u0.shape[1]

    def matrix(self):
        """Dense planted matrix ``U0 @ V0.T``."""
        return self.u0 @ self.v0.T


@dataclass(frozen=True)
class NoiseModel:
    """Additive observation noise.

    ``none`` is exact observation, ``gaussian`` is N(0, sigma^2) on every
    entry, and ``bernoulli_gaussian`` draws N(0, sigma^2) with probability
    ``p`` and zero otherwise (sparse corruption).
    """

    kind: str = "none"
    sigma: float = 0.0
    p: float = 0.1

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "bernoulli_gaussian"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def gaussian(cls, sigma):
        return cls("gaussian", sigma=float(sigma))

    @classmethod
    def bernoulli_gaussian(cls, sigma, p=0.1):
        return cls("bernoulli_gaussian", sigma=float(sigma), p=float(p))

    def sample(self, rng, size):
        """Draw a noise sample of the given shape from ``rng``."""
        if self.kind == "none":
            return np.zeros(size)
        if self.kind == "gaussian":
            return self.sigma * rng.standard_normal(size)
        mask = rng.random(size) < self.p
        return np.where(mask, self.sigma * rng.standard_normal(size), 0.0)

    def to_dict(self):
        return {"kind": self.kind, "sigma": self.sigma, "p": self.p}

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind", "none")
        return cls(kind, sigma=float(d.get("sigma", 0.0)),
                   p=float(d.get("p", 0.1)))


_MAX_REPAIR_ROUNDS = 1000


def generate_mask(n_rows, n_cols, col_degree, seed):
    """Sample a degree-regular observation mask.

    Every column receives exactly ``col_degree`` observations and every row
    ``col_degree * n_cols / n_rows``, which must be an integer.  Sampling
    uses configuration-model stub pairing; parallel edges are removed by
    endpoint swaps with a fresh random partner (degree-preserving), capped
    at 1000 repair rounds.

    Parameters
    ----------
    n_rows, n_cols : int
    col_degree : int
        Observations per column (``c``).
    seed : int or numpy.random.Generator

    Returns
    -------
    ObservationGraph
        Mask-only graph (values zero), edges sorted by (row, col).
    """
    rng = np.random.default_rng(seed)
    if n_rows < 1 or n_cols < 1:
        raise ValueError("n_rows and n_cols must be positive")
    if not 1 <= col_degree <= n_rows:
        raise ValueError(f"col_degree must lie in [1, {n_rows}]")
    total = col_degree * n_cols
    if total % n_rows:
        raise ValueError(
            f"col_degree * n_cols = {total} is not divisible by "
            f"n_rows = {n_rows}; row degree would not be integral")
    row_degree = total // n_rows

    if col_degree == n_rows:
        # fully observed; the configuration model has a single realization
        rows, cols = np.divmod(np.arange(n_rows * n_cols, dtype=np.int64), n_cols)
        return ObservationGraph(n_rows, n_cols, rows, cols)

    rows = np.repeat(np.arange(n_rows, dtype=np.int64), row_degree)
    cols = np.repeat(np.arange(n_cols, dtype=np.int64), col_degree)
    cols = cols[rng.permutation(total)]
    _repair_parallel_edges(rows, cols, n_cols, rng)
    order = np.lexsort((cols, rows))
    return ObservationGraph(n_rows, n_cols, rows[order], cols[order])


def _repair_parallel_edges(rows, cols, n_cols, rng):
    """Remove parallel edges by degree-preserving column-endpoint swaps.

    Only swaps that introduce no new parallel edge are accepted, so every
    accepted swap strictly lowers the duplicate count and the loop
    terminates whenever the mask is not too dense.  Mutates ``cols``.
    """
    total = rows.size
    key = rows * n_cols + cols
    uniq, counts = np.unique(key, return_counts=True)
    count = dict(zip(uniq.tolist(), counts.tolist()))
    pending = _duplicate_positions(rows, cols, n_cols).tolist()
    for _ in range(_MAX_REPAIR_ROUNDS):
        if not pending:
            return
        stuck = []
        for p in pending:
            kp = int(key[p])
            if count.get(kp, 0) < 2:
                continue
            for q in rng.integers(0, total, size=50):
                rp, cp, rq, cq = rows[p], cols[p], rows[q], cols[q]
                if rp == rq or cp == cq:
                    continue
                k_new_p = int(rp * n_cols + cq)
                k_new_q = int(rq * n_cols + cp)
                if count.get(k_new_p, 0) or count.get(k_new_q, 0):
                    continue
                kq = int(key[q])
                count[kp] -= 1
                count[kq] -= 1
                count[k_new_p] = 1
                count[k_new_q] = 1
                cols[p], cols[q] = cq, cp
                key[p], key[q] = k_new_p, k_new_q
                break
            else:
                stuck.append(p)
        pending = stuck
    raise RuntimeError(
        f"failed to realize a simple mask (total={total}, n_cols={n_cols}) "
        f"after {_MAX_REPAIR_ROUNDS} repair rounds; "
        f"{len(pending)} parallel edges left")


def _duplicate_positions(rows, cols, n_cols):
    """Edge positions that repeat an already-seen (row, col) pair."""
    key = rows * n_cols + cols
    order = np.argsort(key, kind="stable")
    sorted_key = key[order]
    dup_mask = np.zeros(key.size, dtype=bool)
    dup_mask[1:] = sorted_key[1:] == sorted_key[:-1]
    return order[dup_mask]


def generate_synthetic(n_rows, n_cols, rank, noise, col_degree, seed):
    """Planted low-rank instance observed on a degree-regular mask.

    Factors have i.i.d. standard normal entries; observed values are
    ``u0_i . v0_j`` plus a noise draw per edge.

    Returns
    -------
    (ObservationGraph, GroundTruth)
    """
    if rank < 1:
        raise ValueError("rank must be positive")
    rng = np.random.default_rng(seed)
    graph = generate_mask(n_rows, n_cols, col_degree, rng)
    u0 = rng.standard_normal((n_rows, rank))
    v0 = rng.standard_normal((n_cols, rank))
    clean = np.sum(u0[graph.rows] * v0[graph.cols], axis=1)
    values = clean + noise.sample(rng, graph.n_edges)
    return graph.with_values(values), GroundTruth(u0, v0)


def load_ratings(path, format="movielens_dat"):
    """Load a ratings file as an observation graph.

    Users map to rows and items to columns; both are reindexed to dense
    0-based indices (sorted by original id) with the original ids kept in
    ``row_labels`` / ``col_labels``.  Duplicate (user, item) pairs keep the
    last occurrence and raise a warning with the duplicate count.

    Parameters
    ----------
    path : str or pathlib.Path
    format : {"movielens_dat", "csv"}
        ``movielens_dat`` parses ``UserID::MovieID::Rating::Timestamp``
        lines; ``csv`` expects a header with ``user,item,rating`` columns.
    """
    users, items, ratings = [], [], []
    if format == "movielens_dat":
        with open(path, "r", encoding="utf-8") as fh:
            for ln, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                parts = line.split("::")
                if len(parts) != 4:
                    raise ValueError(
                        f"{path}: line {ln}: expected "
                        f"'UserID::MovieID::Rating::Timestamp', got {line!r}")
                try:
                    users.append(int(parts[0]))
                    items.append(int(parts[1]))
                    ratings.append(float(parts[2]))
                except ValueError as exc:
                    raise ValueError(f"{path}: line {ln}: {exc}") from None
    elif format == "csv":
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            fields = reader.fieldnames or []
            for col in ("user", "item", "rating"):
                if col not in fields:
                    raise ValueError(f"{path}: missing column {col!r}")
            for ln, rec in enumerate(reader, start=2):
                try:
                    users.append(int(rec["user"]))
                    items.append(int(rec["item"]))
                    ratings.append(float(rec["rating"]))
                except (TypeError, ValueError) as exc:
                    raise ValueError(f"{path}: line {ln}: {exc}") from None
    else:
        raise ValueError(f"unknown ratings format {format!r}")

    if not users:
        raise ValueError(f"{path}: no ratings found")
    users = np.asarray(users, dtype=np.int64)
    items = np.asarray(items, dtype=np.int64)
    ratings = np.asarray(ratings)

    user_ids, rows = np.unique(users, return_inverse=True)
    item_ids, cols = np.unique(items, return_inverse=True)
    key = rows * item_ids.size + cols
    order = np.lexsort((np.arange(key.size), key))
    last = np.ones(key.size, dtype=bool)
    last[:-1] = key[order][1:] != key[order][:-1]
    keep = order[last]
    n_dup = key.size - keep.size
    if n_dup:
        warnings.warn(f"{path}: dropped {n_dup} duplicate ratings "
                      f"(kept last occurrence)")
    return ObservationGraph(user_ids.size, item_ids.size,
                            rows[keep], cols[keep], ratings[keep],
                            row_labels=user_ids, col_labels=item_ids)


def sparsify_by_user(graph, max_ratings):
    """Keep only users with strictly fewer than ``max_ratings`` ratings.

    Users (rows) at or above the threshold are dropped with all their
    edges; items (columns) left without ratings are dropped too.  Remaining
    nodes are reindexed densely and labels are carried over.  The result
    may be empty.
    """
    if max_ratings < 1:
        raise ValueError("max_ratings must be at least 1")
    keep_rows = np.flatnonzero(graph.row_degrees < max_ratings)
    edge_keep = np.isin(graph.rows, keep_rows)
    rows = graph.rows[edge_keep]
    cols = graph.cols[edge_keep]
    values = graph.values[edge_keep]
    keep_cols = np.unique(cols)
    row_map = np.full(graph.n_rows, -1, dtype=np.int64)
    row_map[keep_rows] = np.arange(keep_rows.size)
    col_map = np.full(graph.n_cols, -1, dtype=np.int64)
    col_map[keep_cols] = np.arange(keep_cols.size)

    def _sublabels(labels, keep):
        return None if labels is None else labels[keep]

    return ObservationGraph(keep_rows.size, keep_cols.size,
                            row_map[rows], col_map[cols], values,
                            row_labels=_sublabels(graph.row_labels, keep_rows),
                            col_labels=_sublabels(graph.col_labels, keep_cols))


@dataclass(frozen=True)
class Fold:
    """Edge-id split for one cross-validation fold."""

    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray


def split_folds(graph, k, validation_fraction=0.05, seed=0):
    """Split edges into ``k`` folds with a held-out validation subset.

    The k test folds partition all edges.  For each fold, the remaining
    edges are split into a validation part (``validation_fraction``,
    rounded to the nearest count) and the training part.

    Returns
    -------
    list of Fold
    """
    n_edges = graph.n_edges
    if not 2 <= k <= n_edges:
        raise ValueError(f"k must lie in [2, {n_edges}]")
    if not 0.0 <= validation_fraction < 1.0:
        raise ValueError("validation_fraction must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n_edges)
    parts = np.array_split(perm, k)
    folds = []
    for f in range(k):
        test = parts[f]
        rest = np.concatenate([parts[g] for g in range(k) if g != f])
        n_val = int(round(validation_fraction * rest.size))
        val_pick = rng.permutation(rest.size)[:n_val]
        val_mask = np.zeros(rest.size, dtype=bool)
        val_mask[val_pick] = True
        folds.append(Fold(train=np.sort(rest[~val_mask]),
                          validation=np.sort(rest[val_mask]),
                          test=np.sort(test)))
    return folds


def save_instance(prefix, graph, truth, seed):
    """Write a synthetic instance as ``<prefix>_edges.csv`` (row,col,value
    triples) and ``<prefix>_truth.txt`` (4-line header: N, M, R, seed,
    followed by the two dense factors, row-major)."""
    edges_path = f"{prefix}_edges.csv"
    truth_path = f"{prefix}_truth.txt"
    with open(edges_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "value"])
        for i, j, y in zip(graph.rows, graph.cols, graph.values):
            writer.writerow([int(i), int(j), repr(float(y))])
    with open(truth_path, "w", encoding="utf-8") as fh:
        fh.write(f"N {graph.n_rows}\n")
        fh.write(f"M {graph.n_cols}\n")
        fh.write(f"R {truth.rank}\n")
        fh.write(f"seed {int(seed)}\n")
        for mat in (truth.u0, truth.v0):
            for row in mat:
                fh.write(" ".join(repr(float(x)) for x in row) + "\n")
    return edges_path, truth_path


def load_instance(prefix):
    """Inverse of :func:`save_instance`.

    Returns
    -------
    (ObservationGraph, GroundTruth, seed)
    """
    edges_path = f"{prefix}_edges.csv"
    truth_path = f"{prefix}_truth.txt"
    rows, cols, values = [], [], []
    with open(edges_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(int(rec["row"]))
            cols.append(int(rec["col"]))
            values.append(float(rec["value"]))
    with open(truth_path, "r", encoding="utf-8") as fh:
        header = {}
        for _ in range(4):
            name, value = fh.readline().split()
            header[name] = int(value)
        n, m, r = header["N"], header["M"], header["R"]
        data = np.loadtxt(fh).reshape(n + m, r)
    truth = GroundTruth(u0=data[:n].copy(), v0=data[n:].copy())
    graph = ObservationGraph(n, m, np.asarray(rows, dtype=np.int64),
                             np.asarray(cols, dtype=np.int64),
                             np.asarray(values))
    return graph, truth, header["seed"]
