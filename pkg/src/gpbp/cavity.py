"""Natural-parameter message algebra shared by the exact solvers.

Each directed edge message is the pair ``(mean, alpha)`` of a cavity
estimate: ``mean`` is the cavity mean vector and ``alpha`` its scalar
uncertainty coefficient ``mean' inv mean / ||mean||^4``.  An incident
message enters the receiving node's quadratic form through a rank-one
*contribution*

    precision term:  outer_scale * outer(vector, vector)
    field term:      outer_scale * y * vector

with ``outer_scale = 1 / (1 + y^2 alpha)`` (or exactly 1 when alpha
coefficients are disabled, which recovers the alternating-least-squares
message passing).  A node accumulates ``lam * I`` plus all incident
contributions; per-edge cavity quantities are obtained by Sherman-Morrison
rank-one downdates of the node inverse, which keeps the per-edge cost at
O(R^2).

The functions here are straightforward dense-numpy reference
implementations; the sweep kernels in :mod:`gpbp._kernels` reproduce the
same arithmetic in compiled loops and are cross-checked against this
module in the tests.
"""

from dataclasses import dataclass, field

import numpy as np

# Below this |denominator| a rank-one downdate is considered near-singular
# and the cavity inverse is rebuilt by direct factorization instead.
DOWNDATE_GUARD = 1e-12
# Largest stored alpha; bounds 1 + y^2 alpha away from overflow when the
# mean collapses toward zero (alpha grows like 1 / ||mean||^2 there).
ALPHA_CAP = 1e250


@dataclass
class EdgeMessage:
    """Directed edge message with its previous-sweep copy (for damping)."""

    mean: np.ndarray
    alpha: float
    prev_mean: np.ndarray = None
    prev_alpha: float = None

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        if self.prev_mean is None:
            self.prev_mean = self.mean.copy()
        if self.prev_alpha is None:
            self.prev_alpha = self.alpha


@dataclass(frozen=True)
class Contribution:
    """Rank-one contribution of one incoming message to a node."""

    vector: np.ndarray
    y: float
    outer_scale: float

    def precision_term(self):
        return self.outer_scale * np.outer(self.vector, self.vector)

    def field_term(self):
        return self.outer_scale * self.y * self.vector

    def scaled(self, weight):
        """Contribution with its scale multiplied by ``weight`` (damping)."""
        return Contribution(self.vector, self.y, weight * self.outer_scale)


def contribution_from_message(msg, y, use_alpha):
    """Contribution of a message across an edge with observation ``y``.

    Parameters
    ----------
    msg : EdgeMessage
    y : float
    use_alpha : bool
        When false the alpha coefficient is dropped (``outer_scale = 1``),
        which is the alternating-least-squares variant.

    Returns
    -------
    Contribution
    """
    scale = 1.0 / (1.0 + y * y * msg.alpha) if use_alpha else 1.0
    return Contribution(np.asarray(msg.mean, dtype=np.float64), float(y), scale)


def damped_contributions(msg, y, use_alpha, gamma):
    """Damped contribution terms of a message.

    Mixes the current and previous-sweep contribution with weights
    ``1 - gamma`` and ``gamma``; zero-weight terms are omitted.

    Returns
    -------
    list of Contribution (length 1 or 2)
    """
    cur = contribution_from_message(msg, y, use_alpha)
    if gamma == 0.0:
        return [cur]
    prev = contribution_from_message(
        EdgeMessage(msg.prev_mean, msg.prev_alpha), y, use_alpha)
    if gamma == 1.0:
        return [prev]
    return [cur.scaled(1.0 - gamma), prev.scaled(gamma)]


@dataclass
class NodeState:
    """Accumulated quadratic form of one node.

    ``precision`` is ``lam * I`` plus all incident precision terms,
    ``field`` the summed field terms, ``mean = precision_inv @ field`` and
    ``alpha`` the node-level uncertainty coefficient.  The ``prev_*``
    slots hold the previous-sweep values needed by the node-damped
    approximate solvers.
    """

    precision: np.ndarray
    precision_inv: np.ndarray
    field: np.ndarray
    mean: np.ndarray
    alpha: float
    prev_inv: np.ndarray = field(default=None)
    prev_mean: np.ndarray = field(default=None)
    prev_alpha: float = field(default=None)


def alpha_from(mean, inv):
    """Uncertainty coefficient ``mean' inv mean / ||mean||^4``.

    Defined as 0 when the mean vanishes (the 0/0 limit of an
    uninformative cavity); clamped to [0, ALPHA_CAP], dividing by the
    squared norm twice so subnormal means cannot underflow the
    denominator.
    """
    sq = float(mean @ mean)
    if sq == 0.0:
        return 0.0
    al = (float(mean @ inv @ mean) / sq) / sq
    return min(max(al, 0.0), ALPHA_CAP)


def accumulate_node(contributions, lam, rank):
    """Accumulate a node state from incident contributions.

    The inverse is computed by direct factorization; with ``lam > 0`` the
    precision is positive definite by construction.  With ``lam = 0`` and
    too few contributions the precision is singular and numpy's
    ``LinAlgError`` propagates.

    Parameters
    ----------
    contributions : iterable of Contribution
    lam : float
        Ridge parameter, must be nonnegative.
    rank : int
        Dimension R of the node vectors.

    Returns
    -------
    NodeState
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    precision = lam * np.eye(rank)
    fld = np.zeros(rank)
    for c in contributions:
        precision += c.precision_term()
        fld += c.field_term()
    inv = np.linalg.inv(precision)
    mean = inv @ fld
    return NodeState(precision=precision, precision_inv=inv, field=fld,
                     mean=mean, alpha=alpha_from(mean, inv))


def sm_downdate(inv, vector, scale):
    """Sherman-Morrison removal of ``scale * outer(vector, vector)``.

    Returns
    -------
    (new_inv, denominator)
        ``denominator = 1 - scale * vector' inv vector``; the caller must
        check it against :data:`DOWNDATE_GUARD` before trusting the
        result.
    """
    p = inv @ vector
    den = 1.0 - scale * float(vector @ p)
    if abs(den) < DOWNDATE_GUARD:
        return None, den
    return inv + (scale / den) * np.outer(p, p), den


def sm_update(inv, vector, scale):
    """Sherman-Morrison addition of ``scale * outer(vector, vector)``.

    The denominator ``1 + scale * vector' inv vector`` is at least 1 for
    positive semidefinite ``inv`` and ``scale >= 0``, so no guard is
    needed on this path.
    """
    p = inv @ vector
    den = 1.0 + scale * float(vector @ p)
    return inv - (scale / den) * np.outer(p, p)


def cavity_downdate(node, contrib):
    """Remove one contribution from a node, giving cavity quantities.

    Uses the Sherman-Morrison downdate; if its denominator falls within
    :data:`DOWNDATE_GUARD` of zero, the cavity precision is rebuilt and
    factorized directly instead.

    Returns
    -------
    (cavity_inv, cavity_mean, cavity_alpha)
    """
    cavity_inv, _ = sm_downdate(node.precision_inv, contrib.vector,
                                contrib.outer_scale)
    if cavity_inv is None:
        cavity_prec = node.precision - contrib.precision_term()
        cavity_inv = np.linalg.inv(cavity_prec)
    cavity_field = node.field - contrib.field_term()
    cavity_mean = cavity_inv @ cavity_field
    return cavity_inv, cavity_mean, alpha_from(cavity_mean, cavity_inv)


def cavity_downdate_many(node, contribs):
    """Remove several contributions of one edge (damped pairs).

    Chains rank-one downdates; each near-singular step falls back to a
    direct rebuild of the partially downdated precision.

    Returns
    -------
    (cavity_inv, cavity_mean, cavity_alpha)
    """
    inv = node.precision_inv
    prec = node.precision
    fld = node.field.copy()
    for c in contribs:
        prec = prec - c.precision_term()
        new_inv, _ = sm_downdate(inv, c.vector, c.outer_scale)
        inv = np.linalg.inv(prec) if new_inv is None else new_inv
        fld -= c.field_term()
    mean = inv @ fld
    return inv, mean, alpha_from(mean, inv)
