import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from mhpbayes import kernels as K
from mhpbayes.kernels import seeded_rng

from conftest import assert_mean_within, assert_var_within


class TestSeededRng:
    def test_same_pair_same_draws(self):
        a = seeded_rng(7, 3).random(5)
        b = seeded_rng(7, 3).random(5)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        assert not np.allclose(seeded_rng(7, 0).random(5), seeded_rng(7, 1).random(5))


class TestErlangPdf:
    def test_exponential_at_zero(self):
        assert K.erlang_pdf(0.0, 1, 1.0) == 1.0

    def test_shape_two_formula(self):
        np.testing.assert_allclose(K.erlang_pdf(2.0, 2, 1.0), 2 * math.exp(-2), rtol=1e-14)
        np.testing.assert_allclose(K.erlang_pdf(2.0, 2, 1.0), 0.270671, atol=1e-6)

    def test_zero_for_higher_shapes_at_origin(self):
        assert K.erlang_pdf(0.0, 2, 5.0) == 0.0

    @pytest.mark.parametrize("l,rate", [(1, 0.5), (3, 2.0), (20, 10.0), (60, 1.0)])
    def test_normalizes(self, l, rate):
        val, _ = integrate.quad(lambda x: K.erlang_pdf(x, l, rate), 0, np.inf, limit=500)
        assert abs(val - 1.0) < 1e-6

    def test_large_shape_matches_scipy(self):
        x = np.linspace(0.1, 400, 200)
        np.testing.assert_allclose(K.log_erlang_pdf(x, 150, 0.5),
                                   stats.gamma.logpdf(x, 150, scale=2.0), rtol=1e-10)


class TestErlangCdf:
    def test_zero(self):
        for l in (1, 4, 30):
            assert K.erlang_cdf(0.0, l, 3.0) == 0.0

    def test_exponential_median(self):
        np.testing.assert_allclose(K.erlang_cdf(math.log(2.0), 1, 1.0), 0.5, rtol=1e-14)

    def test_trapezoid_oracle(self):
        # 10^6-point trapezoid rule on the density
        x = np.linspace(0.0, 1.5, 10**6 + 1)
        approx = np.trapezoid(K.erlang_pdf(x, 3, 2.0), x)
        assert abs(K.erlang_cdf(1.5, 3, 2.0) - approx) < 1e-8

    @pytest.mark.parametrize("l", [1, 2, 10, 50, 200])
    def test_limit_at_infinity(self, l):
        assert abs(K.erlang_cdf(1e7, l, 1.0) - 1.0) < 1e-12

    def test_matches_incomplete_gamma(self):
        x = np.linspace(0.0, 80.0, 401)
        for l in (1, 5, 17, 40, 200):
            np.testing.assert_allclose(K.erlang_cdf(x, l, 0.7), stats.gamma.cdf(x, l, scale=1 / 0.7),
                                       atol=1e-13)
            np.testing.assert_allclose(K.erlang_sf(x, l, 0.7), stats.gamma.sf(x, l, scale=1 / 0.7),
                                       rtol=1e-9, atol=1e-300)

    @settings(max_examples=60, deadline=None)
    @given(l=st.integers(1, 200), rate=st.floats(0.01, 50.0), x=st.lists(st.floats(0, 1e4), min_size=2, max_size=20))
    def test_monotone_and_bounded(self, l, rate, x):
        x = np.sort(np.asarray(x))
        c = K.erlang_cdf(x, l, rate)
        assert np.all((c >= 0) & (c <= 1))
        assert np.all(np.diff(c) >= -1e-15)
        np.testing.assert_allclose(c + K.erlang_sf(x, l, rate), 1.0, atol=1e-12)


class TestLomax:
    def test_value_at_zero(self):
        assert K.lomax_pdf(0.0, 2.0, 1.0) == 2.0

    def test_value_at_one(self):
        assert K.lomax_pdf(1.0, 1.0, 1.0) == 0.25

    @pytest.mark.parametrize("p,c", [(2.0, 1.0), (20.0, 2.0), (10.5, 1.0), (0.8, 3.0)])
    def test_normalizes(self, p, c):
        val, _ = integrate.quad(lambda x: K.lomax_pdf(x, p, c), 0, np.inf, limit=500)
        assert abs(val - 1.0) < 1e-6

    def test_cdf_closed_form(self):
        H = np.array([0.0, 0.3, 5.0, 1e9])
        np.testing.assert_allclose(K.lomax_cdf(H, 3.0, 2.0), 1 - (2.0 / (2.0 + H)) ** 3)
        assert K.lomax_cdf(1e300, 3.0, 2.0) == 1.0

    @settings(max_examples=50, deadline=None)
    @given(p=st.floats(0.1, 100), c=st.floats(0.01, 100), x=st.floats(0, 1e5))
    def test_pdf_nonnegative_cdf_bounded(self, p, c, x):
        assert K.lomax_pdf(x, p, c) >= 0
        assert 0.0 <= K.lomax_cdf(x, p, c) <= 1.0


class TestTruncExp:
    def test_uniform_limit(self):
        np.testing.assert_allclose(K.trunc_exp_pdf(7.0, 1e-8, 4.0, 10.0), 1 / 6, rtol=1e-6)

    def test_direct_formula(self):
        expected = 0.6 * math.exp(-2.4) / (math.exp(-2.4) - math.exp(-6.0))
        np.testing.assert_allclose(K.trunc_exp_pdf(4.0, 0.6, 4.0, 10.0), expected, rtol=1e-12)

    def test_normalizes(self):
        val, _ = integrate.quad(lambda k: K.trunc_exp_pdf(k, 0.6, 4.0, 10.0), 4.0, 10.0,
                                epsabs=1e-12, epsrel=1e-12)
        assert abs(val - 1.0) < 1e-8

    def test_outside_support_raises(self):
        with pytest.raises(ValueError):
            K.trunc_exp_pdf(11.0, 0.6, 4.0, 10.0)


class TestSamplers:
    def test_discrete_degenerate(self, rng):
        assert all(K.sample_discrete(rng, [0, 0, 1]) == 2 for _ in range(100))

    def test_discrete_all_zero_raises(self, rng):
        with pytest.raises(ValueError):
            K.sample_discrete(rng, [0.0, 0.0])

    def test_discrete_frequencies(self, rng):
        w = np.array([1.0, 3.0, 6.0])
        draws = np.array([K.sample_discrete(rng, w) for _ in range(20000)])
        for i, p in enumerate(w / w.sum()):
            assert_mean_within(draws == i, p)

    def test_gamma_moments(self, rng):
        x = K.sample_gamma(rng, 3.0, 2.0, size=10**6)
        assert_mean_within(x, 1.5)
        assert_var_within(x, 3.0 / 4.0)

    def test_log_gamma_small_shape(self, rng):
        lx = K.sample_log_gamma(rng, 0.5, 2.0, size=10**6)
        assert_mean_within(np.exp(lx), 0.25)
        lx = K.sample_log_gamma(rng, 1e-4, 1.0, size=1000)
        assert np.all(np.isfinite(lx))

    def test_beta_moments(self, rng):
        x = K.sample_beta(rng, 2.0, 5.0, size=10**6)
        assert_mean_within(x, 2 / 7)
        assert_var_within(x, 2 * 5 / (49 * 8))

    def test_poisson_moments(self, rng):
        x = K.sample_poisson(rng, 4.5, size=10**6)
        assert_mean_within(x, 4.5)
        assert_var_within(x, 4.5)

    def test_lognormal_step_moments(self, rng):
        x = np.array([K.sample_lognormal_step(rng, 2.0, 0.3) for _ in range(20000)])
        assert_mean_within(np.log(x), math.log(2.0))
        assert_var_within(np.log(x), 0.09)

    def test_truncated_gamma_contract(self, rng):
        x = np.array([K.sample_truncated_gamma(rng, 2.0, 1.0, upper=1.0) for _ in range(5000)])
        assert np.all(x < 1.0) and np.all(x > 0)

    def test_truncated_gamma_matches_scipy(self, rng):
        lo, hi = 0.5, 2.0
        d = stats.gamma(2.0, scale=1.0)
        mass = d.cdf(hi) - d.cdf(lo)
        mean, _ = integrate.quad(lambda x: x * d.pdf(x) / mass, lo, hi)
        x2, _ = integrate.quad(lambda x: x * x * d.pdf(x) / mass, lo, hi)
        x = np.array([K.sample_truncated_gamma(rng, 2.0, 1.0, lo, hi) for _ in range(40000)])
        assert_mean_within(x, mean)
        assert_var_within(x, x2 - mean**2)

    def test_truncated_gamma_far_tail(self, rng):
        # interval mass far below 1e-12 exercises the rejection fallback
        x = np.array([K.sample_truncated_gamma(rng, 3.0, 1.0, lower=80.0) for _ in range(2000)])
        assert np.all(x >= 80.0)
        # the conditional excess is close to Exp(1 - 2/80)
        assert_mean_within(x - 80.0, 1.0 / (1.0 - 2.0 / 80.0), k=5)

    def test_truncated_gamma_empty_interval(self, rng):
        with pytest.raises(ValueError):
            K.sample_truncated_gamma(rng, 2.0, 1.0, 2.0, 1.0)

    def test_gumbel_argmax_groups(self, rng):
        logw = np.log(np.array([1.0, 1.0, 2.0, 1e-300, 1.0]))
        groups = np.array([0, 0, 0, 1, 1])
        counts = np.zeros(5)
        for _ in range(30000):
            counts[K.gumbel_argmax(rng, logw, groups, 2)] += 1
        freq = counts / 30000
        np.testing.assert_allclose(freq[:3], [0.25, 0.25, 0.5], atol=0.02)
        assert freq[4] == 1.0
