import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from udnsim.metrics import DENSITY_ACTIVE_BS, EmpiricalCdf, SinrSampleSet, ase, sinr_cdf


def sample_set(sinr, n_active, n_streams, area=1.0, start=0):
    sinr = np.asarray(sinr, dtype=float)
    n = sinr.size
    return SinrSampleSet(sinr, ~np.isnan(sinr), np.arange(start, start + n),
                         np.asarray(n_active), np.asarray(n_streams), area)


class TestAse:
    def test_hand_example(self):
        # rates log2(2)=1, log2(4)=2, below threshold, unscheduled
        s = sample_set([1.0, 3.0, 0.5, np.nan], [10, 10, 10, 10], [20, 20, 20, 20], area=2.0)
        res = ase(s, gamma0=1.0)
        assert res.density == pytest.approx(10.0)
        assert res.mean_rate == pytest.approx(1.0)
        assert res.ase == pytest.approx(10.0)
        assert res.n_samples == 3

    def test_active_density_mode(self):
        s = sample_set([1.0, 3.0], [10, 10], [20, 20], area=2.0)
        assert ase(s, 1.0, DENSITY_ACTIVE_BS).ase == pytest.approx(5.0 * 1.5)

    def test_external_density(self):
        s = sample_set([3.0, 3.0], [1, 1], [1, 1])
        res = ase(s, 1.0, lambda_tilde=58.5, k_u_mean=2.0)
        assert res.ase == pytest.approx(117.0 * 2.0)
        assert res.ci95_halfwidth == 0.0

    def test_no_samples(self):
        with pytest.raises(ValueError):
            ase(sample_set([np.nan], [1], [0]))

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            ase(sample_set([1.0, 2.0], [1, 1], [1, 1]), 1.0, "nope")

    @given(st.lists(st.floats(0.0, 1e4), min_size=2, max_size=40), st.randoms())
    def test_order_independent(self, values, r):
        s = sample_set(values, [3] * len(values), [5] * len(values))
        perm = list(range(len(values)))
        r.shuffle(perm)
        p = sample_set(np.asarray(values)[perm], [3] * len(values), [5] * len(values))
        assert ase(s).ase == ase(p).ase

    def test_ci_coverage(self):
        """The delta-method interval covers the true ASE about 95% of the time."""
        rng = np.random.default_rng(9)
        true = 4.0 * np.log2(1 + 2.0)  # density 4 times mean rate with SINR ~ Exp(1/2)
        # E[log2(1+X)] for X ~ Exp(mean 2), thresholded at 0: exp(1/2) E1(1/2) / ln 2
        from scipy.special import exp1
        true = 4.0 * math.exp(0.5) * exp1(0.5) / math.log(2)
        hits = 0
        trials = 400
        for _ in range(trials):
            n = 400
            s = sample_set(rng.exponential(2.0, n), rng.poisson(4, n), rng.poisson(4, n))
            res = ase(s, gamma0=0.0)
            hits += abs(res.ase - true) <= res.ci95_halfwidth
        assert 0.91 <= hits / trials <= 0.99


class TestSampleSet:
    def test_sorted_by_drop(self):
        s = SinrSampleSet(np.array([2.0, 1.0]), np.array([True, True]), np.array([5, 3]),
                          np.array([1, 2]), np.array([1, 2]), 1.0)
        np.testing.assert_array_equal(s.drop_index, [3, 5])
        np.testing.assert_array_equal(s.sinr, [1.0, 2.0])

    def test_merge_is_order_free(self):
        a = sample_set([1.0, 2.0], [1, 2], [2, 3], start=0)
        b = sample_set([3.0, np.nan], [4, 1], [4, 1], start=2)
        ab, ba = SinrSampleSet.merge(a, b), SinrSampleSet.merge(b, a)
        np.testing.assert_array_equal(ab.sinr, ba.sinr)
        assert ase(ab).ase == ase(ba).ase
        assert ab.mean_khat == pytest.approx(10 / 8)

    def test_densities(self):
        s = sample_set([1.0, 1.0], [4, 6], [8, 10], area=2.0)
        assert s.empirical_active_density == 2.5
        assert s.stream_density == 4.5


class TestCdf:
    def test_step_values(self):
        c = EmpiricalCdf([3.0, 1.0, 2.0, np.nan])
        assert c(0.5) == 0.0 and c(1.0) == pytest.approx(1 / 3) and c(3.0) == 1.0
        assert c.coverage(2.0) == pytest.approx(1 / 3)
        assert c.quantile(0.5) == 2.0

    def test_from_sample_set(self):
        c = sinr_cdf(sample_set([1.0, np.nan, 4.0], [1] * 3, [1] * 3))
        assert c.x.tolist() == [1.0, 4.0]

    def test_empty(self):
        with pytest.raises(ValueError):
            EmpiricalCdf([np.nan])

    @given(st.lists(st.floats(0, 1e6), min_size=1, max_size=50), st.floats(0, 1e6), st.floats(0, 1e6))
    def test_monotone(self, xs, a, b):
        c = EmpiricalCdf(xs)
        assert c(min(a, b)) <= c(max(a, b))
