import math

import numpy as np
from hypothesis import HealthCheck, given, settings, strategies as st

from twospike import gibbs, limit_laws, measures, oracle, spectrum, variational
from twospike.errors import KTooSmall

PROPS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
SLOW = settings(max_examples=12, deadline=None, suppress_health_check=[HealthCheck.too_slow])

alphas = st.lists(st.floats(0.2, 8.0), min_size=2, max_size=5)
seeds = st.integers(0, 2 ** 32 - 1)


@SLOW
@given(alphas, seeds)
def test_dirichlet_from_gamma_moments(a, seed):
    p = measures.DirichletParams(tuple(a))
    m = 40_000
    y = measures.sample_dirichlet(p, np.random.default_rng(seed), m)
    a = np.asarray(a)
    a0 = a.sum()
    mean = a / a0
    second = a * (a + 1) / (a0 * (a0 + 1))
    assert np.all(y >= 0) and np.allclose(y.sum(axis=1), 1.0, atol=1e-12)
    # five standard errors, from the exact fourth moment bound E[Y^4] <= E[Y^2]
    assert np.all(np.abs(y.mean(axis=0) - mean) < 5 * np.sqrt(second / m))
    assert np.all(np.abs((y ** 2).mean(axis=0) - second) < 5 * np.sqrt(second / m))


@SLOW
@given(st.integers(2, 20), seeds)
def test_sphere_fourth_moment(n, seed):
    m = 60_000
    x = measures.sample_uniform_sphere(n, np.random.default_rng(seed), m)
    assert np.allclose(np.sum(x * x, axis=1), 1.0, atol=1e-12)
    target = 3.0 / (n * (n + 2))
    est = (x ** 4).mean()
    # pooled over n correlated coordinates; per-coordinate error bound is conservative
    sd = math.sqrt(105.0 / (n * (n + 2) * (n + 4) * (n + 6)) - target ** 2)
    assert abs(est - target) < 5 * sd / math.sqrt(m)


@PROPS
@given(st.integers(1, 600))
def test_quantile_symmetry_and_mass(K):
    e = spectrum.sc_quantiles(K).edges
    assert np.max(np.abs(e + e[::-1])) < 1e-10
    mass = spectrum.sc_cdf(e[:-1]) - spectrum.sc_cdf(e[1:])
    assert np.max(np.abs(mass - 1.0 / K)) < 1e-10


@PROPS
@given(st.floats(0.0, 1.0))
def test_quantile_inverts_cdf(u):
    assert abs(spectrum.sc_cdf(spectrum.sc_quantile(u)) - u) < 1e-11


@PROPS
@given(st.floats(2.0, 1e6, exclude_min=True))
def test_stieltjes_quadratic_identity(z):
    S = spectrum.stieltjes_sc(z)
    assert abs(S * S + z * S + 1.0) < 1e-12
    assert -1.0 <= S < 0.0


@PROPS
@given(st.floats(0.01, 5.0), st.floats(0.0, 60.0))
def test_bessel_normalisation(r, a):
    law = measures.make_tilted_arcsine(r, a)
    ref = math.pi * math.exp(-a * r / 2) * oracle.bessel_i0(a * r / 2)
    assert abs(law.norm - ref) < 1e-8 * ref


@SLOW
@given(st.floats(1.05, 4.0), st.floats(1.05, 3.0), st.floats(0.0, 30.0), seeds)
def test_overlap_support_bound(J, bj, c, seed):
    beta = bj / J
    law = limit_laws.make_limit_law(beta, J, c)
    ov = limit_laws.sample_limit_overlap(law, np.random.default_rng(seed), 20_000)
    assert np.all(np.abs(ov) <= law.r0_hat + 1e-12)


def test_overlap_support_bound_million_draws():
    law = limit_laws.make_limit_law(1.0, 2.0, 2.0)
    ov = limit_laws.sample_limit_overlap(law, 123, 1_000_000)
    assert np.count_nonzero(np.abs(ov) > law.r0_hat + 1e-12) == 0


@PROPS
@given(st.integers(1, 6), st.integers(1, 30), seeds)
def test_block_coarsen_preserves_mass(K, per_block, seed):
    n = 2 + K * per_block
    x = measures.sample_uniform_sphere(n, np.random.default_rng(seed))
    r = measures.block_coarsen(x ** 2, K)
    assert r.shape == (K + 1,)
    assert abs(r.sum() - 1.0) < 1e-12 and np.all(r >= 0)


@PROPS
@given(st.floats(1.1, 5.0), st.floats(1.05, 5.0), st.sampled_from([50, 100, 400]))
def test_lagrange_point_is_interior_maximum(J, bj, K):
    beta = bj / J
    p = variational.make_problem(K, beta, J)
    try:
        sol = variational.solve_lagrange(p)
    except KTooSmall:
        return
    assert np.all(sol.r_hat > 0) and abs(sol.r_hat.sum() - 1.0) < 1e-12
    assert sol.kkt_residual < 1e-10
    rng = np.random.default_rng(K)
    y = rng.dirichlet(np.ones(K + 1), size=50)
    pts = sol.r_hat + 0.5 * (y - sol.r_hat)
    assert np.all(variational.objective_gap(p, sol, pts) < 0)


@PROPS
@given(st.floats(0.05, 3.0), st.floats(1.01, 4.0))
def test_tilde_profile_below_limit(beta, J):
    grid = np.linspace(0.001, 0.999, 300)
    prof = variational.profile_tilde_f(beta, J, grid)
    if beta * J > 1:
        assert prof.max <= variational.free_energy_limit(beta, J) + 1e-12


@SLOW
@given(st.lists(st.floats(-2.0, 3.0), min_size=3, max_size=12), st.floats(0.0, 4.0), seeds)
def test_kernel_preserves_norm_and_energy(lams, beta, seed):
    lam = np.sort(np.asarray(lams))[::-1]
    s = spectrum.Spectrum(lam.size, lam, "FromFile")
    chain = gibbs.Chain(s, gibbs.ChainConfig(beta=beta, sweeps=2, burnin=0, seed=seed % 1000))
    trace = chain.advance(500)
    assert chain.norm_error < 1e-12
    assert abs(trace[-1] - 0.5 * float(chain.eta ** 2 @ lam)) < 1e-10


@PROPS
@given(st.lists(st.floats(-1.0, 1.0), min_size=2, max_size=40), seeds)
def test_emission_keeps_squares(values, seed):
    x = np.asarray(values)
    out = gibbs.emit_sample(x, np.random.default_rng(seed))
    assert np.array_equal(out ** 2, x ** 2)


@PROPS
@given(st.lists(st.floats(-3.0, 3.0), min_size=100, max_size=300))
def test_ks_distance_bounded(values):
    from scipy import stats
    d = limit_laws.ks_distance(values, stats.norm.cdf)
    assert 0.0 <= d <= 1.0


@PROPS
@given(st.floats(0.01, 10.0), st.integers(2, 64))
def test_trapezoid_weights_sum(beta, m):
    w = gibbs.trapezoid_weights(np.linspace(0, beta, m))
    assert abs(w.sum() - beta) < 1e-12 * max(1.0, beta)
