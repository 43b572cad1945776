import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import integrate, stats

from twospike import gibbs
from twospike.errors import DimensionMismatch, EmptySelection, ValidationError
from twospike.limit_laws import make_limit_law, sample_limit_overlap
from twospike.oracle import exact_density_small_n
from twospike.spectrum import Spectrum, build_one_spike_spectrum, build_two_spike_spectrum

Q75 = 0.807945506599034418637923480133


def toy(lams):
    lams = np.asarray(lams, dtype=float)
    return Spectrum(lams.size, lams, "FromFile")


def test_energy_examples():
    s4 = Spectrum(4, np.array([2.5, 2.0, Q75, -Q75]), "TwoSpike")
    eta = np.sqrt([0.4, 0.3, 0.2, 0.1])
    assert gibbs.energy(s4, eta) == pytest.approx(2 * (1 + 0.6 + 0.2 * Q75 - 0.1 * Q75), abs=1e-12)
    assert gibbs.energy(s4, eta) == pytest.approx(3.3616, abs=1e-4)
    s = build_two_spike_spectrum(20, 2.0, 2.0)
    e1 = np.zeros(20)
    e1[0] = 1.0
    assert gibbs.energy(s, e1) == pytest.approx(10 * 2.5)
    flat = np.full(20, 1 / math.sqrt(20))
    assert gibbs.energy(s, flat) == pytest.approx(0.5 * s.eigenvalues.sum())
    with pytest.raises(DimensionMismatch):
        gibbs.energy(s, np.ones(3))


def test_config_validation():
    with pytest.raises(ValidationError):
        gibbs.ChainConfig(beta=1.0, sweeps=10, burnin=10)
    with pytest.raises(ValidationError):
        gibbs.ChainConfig(beta=1.0, sweeps=10, burnin=1, thin=0)
    with pytest.raises(ValidationError):
        gibbs.ChainConfig(beta=-1.0, sweeps=10, burnin=1)
    with pytest.raises(ValidationError):
        gibbs.ChainConfig(beta=1.0, sweeps=10, burnin=1, step_sigma=0.0)


def test_mcmc_step_degenerate_pair_and_infinite_temperature():
    s = toy([1.0, 1.0, 0.0])
    rng = np.random.default_rng(1)
    cfg = gibbs.ChainConfig(beta=50.0, sweeps=2, burnin=0, step_sigma=1.0)
    eta = np.array([0.6, 0.0, 0.8])
    for _ in range(50):
        new = gibbs.mcmc_step(eta, s, cfg, rng, pair=(0, 1))
        assert not np.array_equal(new, eta)
        assert np.linalg.norm(new) == pytest.approx(1.0, abs=1e-14)
        eta = new
    cold = replace(cfg, beta=0.0)
    x = np.array([1.0, 0.0, 0.0])
    for _ in range(50):
        new = gibbs.mcmc_step(x, s, cold, rng)
        assert not np.array_equal(new, x)
        x = new


def test_mcmc_step_beta_zero_samples_uniform():
    s = toy([2.0, 1.0, 0.0, -1.0])
    rng = np.random.default_rng(2)
    cfg = gibbs.ChainConfig(beta=0.0, sweeps=2, burnin=0, step_sigma=2.0)
    eta = np.array([1.0, 0.0, 0.0, 0.0])
    acc = np.zeros(4)
    steps = 40_000
    for _ in range(steps):
        eta = gibbs.mcmc_step(eta, s, cfg, rng)
        acc += eta ** 2
    np.testing.assert_allclose(acc / steps, 0.25, atol=0.02)


def test_emit_sample():
    rng = np.random.default_rng(3)
    eta = np.linspace(0.1, 1.0, 10)
    eta /= np.linalg.norm(eta)
    out = np.array([gibbs.emit_sample(eta, rng) for _ in range(10_000)])
    np.testing.assert_allclose(out ** 2, np.broadcast_to(eta ** 2, out.shape))
    assert abs(np.sign(out[:, 0]).mean()) < 3 / math.sqrt(10_000)


def test_run_chain_deterministic():
    s = build_two_spike_spectrum(30, 2.0, 2.0)
    cfg = gibbs.ChainConfig(beta=1.0, sweeps=300, burnin=100, thin=5, seed=9)
    a = gibbs.run_chain(s, cfg)
    b = gibbs.run_chain(s, cfg)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.energies, b.energies)
    assert a.states.shape == (40, 30)
    c = gibbs.run_chain(s, replace(cfg, chain_id=1))
    assert not np.array_equal(a.states, c.states)
    r = a.simplex(4)
    np.testing.assert_allclose(r.sum(axis=1), 1.0, atol=1e-10)


def test_run_chain_uniform_at_beta_zero():
    s = build_two_spike_spectrum(10, 2.0, 2.0)
    cfg = gibbs.ChainConfig(beta=0.0, sweeps=60_000, burnin=1_000, thin=2, seed=1)
    run = gibbs.run_chain(s, cfg)
    np.testing.assert_allclose((run.states ** 2).mean(axis=0), 0.1, rtol=0.05)
    assert (run.states ** 2).mean() == pytest.approx(0.1, rel=0.02)


def test_run_chain_r0_concentrates_at_optimum():
    s = build_two_spike_spectrum(1000, 2.0, 2.0)
    run = gibbs.run_chain(s, gibbs.ChainConfig(beta=1.0, sweeps=6000, burnin=1000, thin=5, seed=2))
    assert run.r0.mean() == pytest.approx(0.5, abs=0.02)
    assert 0.25 < run.acceptance["TB"] < 0.55


def test_adaptation_freezes_after_burnin():
    s = build_two_spike_spectrum(200, 2.0, 2.0)
    chain = gibbs.Chain(s, gibbs.ChainConfig(beta=1.0, sweeps=1001, burnin=1000, seed=3))
    chain.adapt(1000)
    before = chain.sigma.copy()
    chain.advance(100)
    np.testing.assert_array_equal(chain.sigma, before)


def test_detailed_balance_n3_marginal():
    s = toy([1.5, 0.2, -1.0])
    beta = 1.0
    cfg = gibbs.ChainConfig(beta=beta, sweeps=1_000_000, burnin=10_000, seed=4)
    run = gibbs.run_chain(s, cfg)
    x = run.states[:, 0] ** 2
    oracle = exact_density_small_n(s, beta, 0)
    grid = np.linspace(0.005, 0.995, 199)
    emp = np.searchsorted(np.sort(x), grid, side="right") / x.size
    assert np.max(np.abs(emp - oracle.cdf(grid))) < 0.02


def test_estimate_mean_energy_beta_zero_exact():
    s = build_two_spike_spectrum(1002, 2.0, 2.0)
    cfg = gibbs.ChainConfig(beta=1.0, sweeps=100, burnin=10)
    mean, err = gibbs.estimate_mean_energy(s, 0.0, cfg)
    assert mean == pytest.approx((2.5 + 2.5 - 2.0 / 1002) / (2 * 1002), abs=1e-12)
    assert err == 0.0


def test_estimate_mean_energy_matches_exact_small_n():
    s = toy([2.5, 1.0, 0.0, -0.5, -1.5])
    beta = 2.0
    exact = 0.0
    for i in range(s.n):
        f = exact_density_small_n(s, beta, i)
        m, _ = integrate.quad(lambda y: y * f(y), 0, 1, limit=200)
        exact += 0.5 * s.eigenvalues[i] * m
    cfg = gibbs.ChainConfig(beta=beta, sweeps=400_000, burnin=20_000, seed=5)
    mean, err = gibbs.estimate_mean_energy(s, beta, cfg)
    assert abs(mean - exact) < 4 * err + 1e-3


def test_large_beta_energy_approaches_top_from_below():
    s = build_two_spike_spectrum(200, 2.0, 2.0)
    cfg = gibbs.ChainConfig(beta=5.0, sweeps=4000, burnin=1000, seed=6)
    mean, _ = gibbs.estimate_mean_energy(s, 5.0, cfg)
    assert 1.1 < mean < 1.25


def test_stderr_scales_like_inverse_sqrt_sweeps():
    s = build_two_spike_spectrum(50, 2.0, 2.0)
    short = gibbs.estimate_mean_energy(s, 1.0, gibbs.ChainConfig(beta=1.0, sweeps=11_000, burnin=1_000, seed=7))[1]
    long = gibbs.estimate_mean_energy(s, 1.0, gibbs.ChainConfig(beta=1.0, sweeps=41_000, burnin=1_000, seed=7))[1]
    assert 1.3 < short / long < 3.0


def test_free_energy_ti_small_beta_and_convexity():
    s = build_two_spike_spectrum(40, 2.0, 2.0)
    cfg = gibbs.ChainConfig(beta=1.0, sweeps=4000, burnin=500, seed=8)
    tiny = gibbs.free_energy_ti(s, 1e-6, 8, cfg)
    assert abs(tiny.value) < 1e-5
    res = gibbs.free_energy_ti(s, 2.0, 16, cfg)
    assert float(res) == res.value
    # dF/dbeta = <H/n> is non-decreasing
    slack = 3 * np.hypot(res.stderrs[1:], res.stderrs[:-1])
    assert np.all(np.diff(res.means) >= -slack)
    with pytest.raises(ValidationError):
        gibbs.free_energy_ti(s, 1.0, 4, cfg)


def test_free_energy_ti_threads_match_serial():
    s = build_two_spike_spectrum(30, 2.0, 2.0)
    cfg = gibbs.ChainConfig(beta=1.0, sweeps=600, burnin=100, seed=3)
    a = gibbs.free_energy_ti(s, 1.0, 8, cfg)
    b = gibbs.free_energy_ti(s, 1.0, 8, cfg, threads=4)
    np.testing.assert_array_equal(a.means, b.means)


def test_self_overlap_and_beta_zero_variance():
    eta = np.array([0.6, 0.8, 0.0])
    assert gibbs.overlap(eta, eta) == pytest.approx(1.0)
    s = build_two_spike_spectrum(1000, 2.0, 2.0)
    cfg = gibbs.ChainConfig(beta=0.0, sweeps=101, burnin=100, thin=4, seed=1)
    ov = gibbs.sample_overlaps(s, cfg, 3000)
    assert np.var(ov.ov) == pytest.approx(1e-3, rel=0.15)
    assert np.all(np.abs(ov.ov) <= 1.0)


def test_sample_overlaps_layout_and_threads():
    s = build_two_spike_spectrum(60, 2.0, 2.0)
    cfg = gibbs.ChainConfig(beta=1.0, sweeps=101, burnin=100, thin=2, seed=2)
    one = gibbs.sample_overlaps(s, cfg, 101, chains=3)
    two = gibbs.sample_overlaps(s, cfg, 101, chains=3, threads=3)
    assert len(one) == 101
    np.testing.assert_array_equal(one.ov, two.ov)
    rec = one[0]
    assert isinstance(rec, gibbs.OverlapSample)
    assert rec.r0_pair[0] >= rec.eta2_sq_pair[0]


def test_two_spike_overlap_not_concentrated():
    s = build_two_spike_spectrum(1000, 2.0, 2.0)
    cfg = gibbs.ChainConfig(beta=1.0, sweeps=501, burnin=500, thin=10, seed=3)
    ov = gibbs.sample_overlaps(s, cfg, 2000)
    assert ov.abs_ov.std() > 0.05


def test_conditional_selection():
    s = build_two_spike_spectrum(200, 2.0, 2.0)
    cfg = gibbs.ChainConfig(beta=1.0, sweeps=201, burnin=200, thin=5, seed=4)
    ov = gibbs.sample_overlaps(s, cfg, 300)
    e2, r0 = gibbs.conditional_eta2_samples(ov, 1.0, 0.5)
    assert e2.size == 600 and np.all(e2 <= r0)
    with pytest.raises(EmptySelection):
        gibbs.conditional_eta2_samples(ov, 1e-12, 0.99)
    with pytest.raises(ValidationError):
        gibbs.conditional_eta2_samples(ov, 0.0, 0.5)


def test_conditional_law_untilted_is_arcsine():
    s = build_two_spike_spectrum(1000, 2.0, 0.0)
    cfg = gibbs.ChainConfig(beta=1.0, sweeps=501, burnin=500, thin=10, seed=5)
    ov = gibbs.sample_overlaps(s, cfg, 5000)
    e2, r0 = gibbs.conditional_eta2_samples(ov, 0.02, 0.5)
    u = stats.arcsine.cdf(e2 / r0)
    assert stats.kstest(u, "uniform").statistic < 0.05


def test_rotation_invariance_degenerate_pair():
    s = build_two_spike_spectrum(100, 2.0, 0.0)
    run = gibbs.run_chain(s, gibbs.ChainConfig(beta=1.0, sweeps=52_000, burnin=2_000, thin=1, seed=6))
    a, b = run.states[:, 0] ** 2, run.states[:, 1] ** 2
    assert stats.ks_2samp(a, b).statistic < 0.02


def test_cross_term_variance_identity():
    s = build_two_spike_spectrum(500, 2.0, 2.0)
    cfg = gibbs.ChainConfig(beta=1.0, sweeps=1001, burnin=1000, seed=7)
    a = gibbs.Chain(s, cfg)
    b = gibbs.Chain(s, replace(cfg, chain_id=1))
    a.adapt(1000)
    b.adapt(1000)
    w = np.abs(a.eta[2:] * b.eta[2:])
    rng = np.random.default_rng(0)
    signs = rng.integers(0, 2, size=(20_000, w.size)) * 2 - 1
    cross = signs @ w
    var_exact = float(np.sum(w ** 2))
    # variance of the sample variance of a near-Gaussian sum: 2 sigma^4 / m
    assert cross.var() == pytest.approx(var_exact, abs=4 * var_exact * math.sqrt(2 / 20_000))
    # sum_i a_i^2 b_i^2 <= max_i a_i^2 * sum_i b_i^2 <= max_i a_i^2
    assert var_exact <= np.max(a.eta[2:] ** 2) + 1e-15


def test_classify_constructed_inputs():
    rng = np.random.default_rng(8)
    rs = gibbs.classify_overlap(0.5 + 0.01 * rng.standard_normal(2000))
    assert rs.kind == "RS" and str(rs) == "RS"
    mix = np.where(rng.uniform(size=2000) < 0.5, 0.1, 0.6) + 0.01 * rng.standard_normal(2000)
    k1 = gibbs.classify_overlap(mix)
    assert k1.kind == "kRSB" and k1.k == 1 and str(k1) == "kRSB(1)"
    law = make_limit_law(1.0, 2.0, 2.0)
    full = gibbs.classify_overlap(np.abs(sample_limit_overlap(law, rng, 5000)))
    assert full.kind == "FullRSB"
    with pytest.raises(ValidationError):
        gibbs.classify_overlap(np.zeros(10))


def test_one_spike_overlap_is_replica_symmetric():
    s = build_one_spike_spectrum(400, 2.0)
    cfg = gibbs.ChainConfig(beta=1.0, sweeps=301, burnin=300, thin=10, seed=9)
    ov = gibbs.sample_overlaps(s, cfg, 1000)
    assert gibbs.classify_overlap(ov.abs_ov).kind == "RS"
