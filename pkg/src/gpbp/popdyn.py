"""Population dynamics: distributional fixed point of the message updates.

Two pools of tuples (planted vector, cavity mean, alpha) stand in for
the U-side and V-side message marginals of an infinite random graph.
A sweep refreshes every tuple from degree-minus-one random draws of the
opposite pool, with fresh observation noise per draw.  The readout
estimates the nRMSE a large system would attain at the pools' state.
"""

from dataclasses import dataclass, asdict

import numpy as np

from .cavity import ALPHA_CAP
from .config import MODES
from .errors import SingularityError
from .obsgraph import NoiseModel
from .trace import Trace

_CHUNK = 4096


@dataclass
class PDConfig:
    """Parameters of a population-dynamics run.

    d_u and d_v are the U-node and V-node degrees of the target
    ensemble (d_u / d_v must match its aspect ratio M/N).  Cavity
    refreshes draw degree-minus-one opposite tuples; readouts draw the
    full degree.
    """

    rank: int
    lam: float
    d_u: int
    d_v: int
    noise: NoiseModel
    mode: str = "gpbp"
    n_pop: int = 2000
    gamma: float = 0.0
    seed: int = 0
    init_noise: float = 0.1
    random_init: bool = False
    force_zero_alpha: bool = False
    max_sweeps: int = 500
    burn_in_window: int = 10
    burn_in_rtol: float = 0.01
    monitor_samples: int = 10000
    readout_samples: int = 100000

    def validate(self):
        if self.rank < 1:
            raise ValueError("rank must be at least 1")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n_pop < 100:
            raise ValueError("n_pop must be at least 100")
        if self.d_u < 2 or self.d_v < 2:
            raise ValueError("degrees must be at least 2 (cavity draws need d-1 >= 1)")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.init_noise < 0:
            raise ValueError("init_noise must be nonnegative")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        if self.burn_in_window < 1:
            raise ValueError("burn_in_window must be at least 1")
        if self.burn_in_rtol <= 0:
            raise ValueError("burn_in_rtol must be positive")
        if self.monitor_samples < 1 or self.readout_samples < 1:
            raise ValueError("sample counts must be positive")
        return self

    @property
    def use_alpha(self):
        return self.mode == "gpbp"

    def replace(self, **kwargs):
        data = asdict(self)
        data["noise"] = self.noise
        data.update(kwargs)
        return PDConfig(**data)


class PDPool:
    """Fixed-size tuple populations for both sides, with previous-sweep
    copies of (cavity, alpha) for damping."""

    def __init__(self, u_planted, u_cav, v_planted, v_cav):
        self.u_planted = u_planted
        self.u_cav = u_cav
        self.u_alpha = np.zeros(len(u_planted))
        self.v_planted = v_planted
        self.v_cav = v_cav
        self.v_alpha = np.zeros(len(v_planted))
        self.u_cav_prev = u_cav.copy()
        self.u_alpha_prev = self.u_alpha.copy()
        self.v_cav_prev = v_cav.copy()
        self.v_alpha_prev = self.v_alpha.copy()

    @property
    def size(self):
        return len(self.u_planted)


def pd_init(config, rng=None):
    """Planted vectors ~ N(0,1); cavity means at planted plus an
    init_noise perturbation, or fully random under random_init."""
    config.validate()
    if rng is None:
        rng = np.random.default_rng(config.seed)
    shape = (config.n_pop, config.rank)
    u_planted = rng.standard_normal(shape)
    v_planted = rng.standard_normal(shape)
    if config.random_init:
        u_cav = rng.standard_normal(shape)
        v_cav = rng.standard_normal(shape)
    elif config.init_noise > 0:
        u_cav = u_planted + config.init_noise * rng.standard_normal(shape)
        v_cav = v_planted + config.init_noise * rng.standard_normal(shape)
    else:
        u_cav = u_planted.copy()
        v_cav = v_planted.copy()
    return PDPool(u_planted, u_cav, v_planted, v_cav)


def _estimate(planted_self, opp_planted, opp_cav, opp_alpha, n_draws, lam, noise, rng,
              opp_cav_prev=None, opp_alpha_prev=None, gamma=0.0):
    """Batched ridge estimate of each row of planted_self from n_draws
    opposite tuples (fresh noise per draw).  With gamma > 0 the drawn
    tuples contribute a (1-gamma)/gamma mix of their current and
    previous generations at the same observation."""
    n, rank = planted_self.shape
    idx = rng.integers(0, len(opp_planted), size=(n, n_draws))
    z = noise.sample(rng, (n, n_draws))
    y = np.einsum("pr,pkr->pk", planted_self, opp_planted[idx]) + z

    def accumulate(cav, alpha, weight):
        vec = cav[idx]
        scale = weight / (1.0 + y * y * alpha[idx])
        a = np.einsum("pk,pki,pkj->pij", scale, vec, vec)
        b = np.einsum("pk,pk,pki->pi", scale, y, vec)
        return a, b

    if gamma == 0.0:
        a, b = accumulate(opp_cav, opp_alpha, 1.0)
    else:
        a, b = accumulate(opp_cav, opp_alpha, 1.0 - gamma)
        a2, b2 = accumulate(opp_cav_prev, opp_alpha_prev, gamma)
        a += a2
        b += b2
    diag = np.arange(rank)
    a[:, diag, diag] += lam
    try:
        mean = np.linalg.solve(a, b[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularityError(f"singular pool accumulation: {exc}") from exc
    return a, mean


def _alphas(a, mean):
    # Two divisions instead of squaring norm2: subnormal means must not
    # underflow the denominator.  Clamp as in the edge-message solvers.
    t = np.linalg.solve(a, mean[..., None])[..., 0]
    norm2 = np.einsum("pi,pi->p", mean, mean)
    num = np.einsum("pi,pi->p", mean, t)
    out = np.zeros(len(mean))
    np.divide(num, norm2, out=out, where=norm2 > 0)
    np.divide(out, norm2, out=out, where=norm2 > 0)
    return np.clip(out, 0.0, ALPHA_CAP)


def pd_sweep(pool, config, rng):
    """Refresh the U pool from the V pool, then the V pool from the
    just-updated U pool; previous generations roll forward for damping."""
    compute_alpha = config.use_alpha and not config.force_zero_alpha

    a, cav = _estimate(
        pool.u_planted, pool.v_planted, pool.v_cav, pool.v_alpha,
        config.d_u - 1, config.lam, config.noise, rng,
        pool.v_cav_prev, pool.v_alpha_prev, config.gamma,
    )
    pool.u_cav_prev[:] = pool.u_cav
    pool.u_alpha_prev[:] = pool.u_alpha
    pool.u_cav[:] = cav
    pool.u_alpha[:] = _alphas(a, cav) if compute_alpha else 0.0

    a, cav = _estimate(
        pool.v_planted, pool.u_planted, pool.u_cav, pool.u_alpha,
        config.d_v - 1, config.lam, config.noise, rng,
        pool.u_cav_prev, pool.u_alpha_prev, config.gamma,
    )
    pool.v_cav_prev[:] = pool.v_cav
    pool.v_alpha_prev[:] = pool.v_alpha
    pool.v_cav[:] = cav
    pool.v_alpha[:] = _alphas(a, cav) if compute_alpha else 0.0
    return pool


def pd_readout(pool, config, rng, n_samples=None):
    """nRMSE estimate: independent full-degree estimates of fresh
    planted pairs, sqrt(mean[(u_hat.v_hat - u0.v0)^2] / R)."""
    if n_samples is None:
        n_samples = config.readout_samples
    total = 0.0
    done = 0
    while done < n_samples:
        m = min(_CHUNK, n_samples - done)
        u0 = rng.standard_normal((m, config.rank))
        v0 = rng.standard_normal((m, config.rank))
        _, u_hat = _estimate(
            u0, pool.v_planted, pool.v_cav, pool.v_alpha,
            config.d_u, config.lam, config.noise, rng,
        )
        _, v_hat = _estimate(
            v0, pool.u_planted, pool.u_cav, pool.u_alpha,
            config.d_v, config.lam, config.noise, rng,
        )
        err = np.einsum("pi,pi->p", u_hat, v_hat) - np.einsum("pi,pi->p", u0, v0)
        total += float(err @ err)
        done += m
    return float(np.sqrt(total / (n_samples * config.rank)))


class PDResult:
    def __init__(self, pool, trace, readout, sweeps, converged):
        self.pool = pool
        self.trace = trace
        self.readout = readout
        self.sweeps = sweeps
        self.converged = converged


def pd_run(config):
    """Sweep until the monitor readout moves by less than burn_in_rtol
    for burn_in_window consecutive sweeps (or max_sweeps), then take a
    final readout with the full sample budget."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    pool = pd_init(config, rng)
    trace = Trace(["sweep", "readout_nrmse"])
    readouts = []
    converged = False
    sweeps_done = 0
    for sweep in range(1, config.max_sweeps + 1):
        pd_sweep(pool, config, rng)
        r = pd_readout(pool, config, rng, config.monitor_samples)
        trace.add_row(sweep=sweep, readout_nrmse=r)
        readouts.append(r)
        sweeps_done = sweep
        if len(readouts) > config.burn_in_window:
            window = readouts[-(config.burn_in_window + 1):]
            stable = all(
                abs(window[k + 1] - window[k]) <= config.burn_in_rtol * max(window[k], 1e-12)
                for k in range(config.burn_in_window)
            )
            if stable:
                converged = True
                break
    readout = pd_readout(pool, config, rng, config.readout_samples)
    return PDResult(pool, trace, readout, sweeps_done, converged)
