"""Tests for the population-dynamics simulator."""

import numpy as np
import pytest

from gpbp.errors import SingularityError
from gpbp.obsgraph import NoiseModel
from gpbp.popdyn import PDConfig, pd_init, pd_readout, pd_run, pd_sweep


def make_config(**kwargs):
    base = dict(rank=3, lam=1e-3, d_u=8, d_v=8, noise=NoiseModel.gaussian(0.05),
                n_pop=150, monitor_samples=500, readout_samples=2000, seed=0)
    base.update(kwargs)
    return PDConfig(**base)


def test_planted_pools_are_fixed_point_noiseless():
    # Noiseless draws with lam = 0 re-derive each planted vector exactly,
    # so pools initialized at the planted values never move.
    config = make_config(lam=0.0, noise=NoiseModel.none(), init_noise=0.0)
    rng = np.random.default_rng(config.seed)
    pool = pd_init(config, rng)
    for _ in range(3):
        pd_sweep(pool, config, rng)
        assert np.abs(pool.u_cav - pool.u_planted).max() < 1e-10
        assert np.abs(pool.v_cav - pool.v_planted).max() < 1e-10
    assert pd_readout(pool, config, rng, 1000) < 1e-8


def test_run_converges_at_fixed_point():
    config = make_config(lam=0.0, noise=NoiseModel.none(), init_noise=0.0,
                         burn_in_window=10)
    result = pd_run(config)
    assert result.converged
    assert result.sweeps == config.burn_in_window + 1
    assert result.readout < 1e-8
    assert result.trace.columns == ["sweep", "readout_nrmse"]
    assert len(result.trace) == result.sweeps


def test_pool_sizes_and_planted_vectors_are_invariant():
    config = make_config()
    rng = np.random.default_rng(3)
    pool = pd_init(config, rng)
    planted = (pool.u_planted.copy(), pool.v_planted.copy())
    for _ in range(4):
        pd_sweep(pool, config, rng)
    assert pool.size == config.n_pop
    assert pool.u_cav.shape == (config.n_pop, config.rank)
    assert np.array_equal(pool.u_planted, planted[0])
    assert np.array_equal(pool.v_planted, planted[1])


def test_forced_zero_alpha_reduces_to_alsmp():
    # Stored alphas pinned at zero consume the identical random stream
    # and scale every draw by w / (1 + y^2 * 0) = w: the runs agree draw
    # for draw.
    base = dict(max_sweeps=4, seed=11)
    forced = pd_run(make_config(mode="gpbp", force_zero_alpha=True, **base))
    plain = pd_run(make_config(mode="alsmp", **base))
    assert forced.trace.column("readout_nrmse") == plain.trace.column("readout_nrmse")
    assert forced.readout == plain.readout
    assert np.array_equal(forced.pool.u_cav, plain.pool.u_cav)
    assert not forced.pool.u_alpha.any()


def test_init_layout_and_determinism():
    config = make_config(init_noise=0.0)
    a = pd_init(config)
    b = pd_init(config)
    assert np.array_equal(a.u_planted, b.u_planted)
    assert np.array_equal(a.u_cav, a.u_planted)
    assert np.array_equal(a.v_cav, a.v_planted)
    assert not a.u_alpha.any()

    noisy = pd_init(make_config(init_noise=0.5))
    assert not np.array_equal(noisy.u_cav, noisy.u_planted)

    random = pd_init(make_config(random_init=True))
    assert not np.array_equal(random.u_cav, random.u_planted)


def test_run_is_deterministic():
    config = make_config(max_sweeps=3)
    a = pd_run(config)
    b = pd_run(config)
    assert a.trace.column("readout_nrmse") == b.trace.column("readout_nrmse")
    assert a.readout == b.readout


def test_underdetermined_cavity_raises():
    # d - 1 draws below the rank leave the lam = 0 normal equations
    # singular.
    config = make_config(rank=3, d_u=3, d_v=3, lam=0.0)
    with pytest.raises(SingularityError):
        pd_run(config)


def test_replace_keeps_noise_model():
    config = make_config()
    other = config.replace(seed=5)
    assert other.noise is config.noise
    assert other.seed == 5


def test_two_seeds_agree_at_large_population():
    config = make_config(rank=2, n_pop=2000, d_u=16, d_v=16, lam=0.01,
                         noise=NoiseModel.gaussian(0.1), max_sweeps=80,
                         monitor_samples=2000, readout_samples=40000)
    a = pd_run(config)
    b = pd_run(config.replace(seed=1))
    assert abs(a.readout - b.readout) / max(a.readout, b.readout) < 0.05


def test_seed_spread_shrinks_with_population():
    def spread(n_pop):
        values = [
            pd_run(make_config(rank=2, n_pop=n_pop, d_u=16, d_v=16, lam=0.01,
                               noise=NoiseModel.gaussian(0.1), max_sweeps=80,
                               monitor_samples=2000, readout_samples=40000,
                               seed=seed)).readout
            for seed in (0, 1, 2)
        ]
        return max(values) - min(values)

    assert spread(1200) < spread(150)


@pytest.mark.parametrize("field,value", [
    ("rank", 0),
    ("lam", -0.1),
    ("mode", "mp"),
    ("n_pop", 50),
    ("d_u", 1),
    ("d_v", 0),
    ("gamma", 2.0),
    ("init_noise", -1.0),
    ("max_sweeps", 0),
    ("burn_in_window", 0),
    ("burn_in_rtol", 0.0),
    ("monitor_samples", 0),
])
def test_config_validation_rejects(field, value):
    with pytest.raises(ValueError):
        make_config(**{field: value}).validate()
