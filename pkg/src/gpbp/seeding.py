"""Deterministic seed derivation for experiment grids.

Every unit of work (instance, grid point, readout) gets its own
``numpy.random.Generator`` derived from a base seed plus a tuple of string
or integer tags.  Derivation goes through SHA-256 so the streams are stable
across processes, platforms and worker counts.
"""

import hashlib

import numpy as np

_MASK63 = (1 << 63) - 1


def derive_seed(base_seed, *parts):
    """Derive a child seed from ``base_seed`` and a sequence of tags.

    Parameters
    ----------
    base_seed : int
        Experiment-level seed.
    *parts : str or int
        Coordinates identifying the unit of work, e.g.
        ``("synth", c, gamma, instance)``.

    Returns
    -------
    int
        A 63-bit integer, reproducible across runs and processes.
    """
    payload = repr((int(base_seed),) + tuple(parts)).encode()
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "little") & _MASK63


def derive_rng(base_seed, *parts):
    """Return a ``numpy.random.Generator`` seeded via :func:`derive_seed`."""
    return np.random.default_rng(derive_seed(base_seed, *parts))
