import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from udnsim.errors import NumericalError
from udnsim.estimation import complex_normal
from udnsim.precoding import typical_ue_sinr, zf_directions, zf_precoders


def random_instance(rng):
    m = int(rng.integers(1, 201))
    k = int(rng.integers(1, max(1, m // 4) + 1))
    return m, k, complex_normal((m, k), rng)


class TestZeroForcing:
    def test_intra_cell_leakage(self):
        """1000 random (M, K) draws with K <= M/4: cross terms vanish."""
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(1000):
            m, k, h = random_instance(rng)
            f = zf_directions(h)
            g = np.conj(h.T) @ f
            worst = max(worst, np.max(np.abs(g - np.diag(np.diag(g)))))
        assert worst < 1e-10

    @given(st.integers(0, 2**32 - 1))
    def test_unit_norm_columns(self, seed):
        m, k, h = random_instance(np.random.default_rng(seed))
        f = zf_directions(h)
        np.testing.assert_allclose(np.linalg.norm(f, axis=0), 1.0, rtol=1e-12)

    def test_single_stream_is_matched_filter(self, rng):
        h = complex_normal((6, 1), rng)
        np.testing.assert_allclose(zf_directions(h), h / np.linalg.norm(h), rtol=1e-13)

    def test_matches_pseudo_inverse(self, rng):
        h = complex_normal((12, 3), rng)
        ref = np.linalg.pinv(h).conj().T
        ref /= np.linalg.norm(ref, axis=0)
        np.testing.assert_allclose(zf_directions(h), ref, atol=1e-12)

    def test_batched(self, rng):
        h = complex_normal((5, 8, 2), rng)
        f = zf_directions(h)
        for i in range(5):
            np.testing.assert_allclose(f[i], zf_directions(h[i]), atol=1e-14)

    def test_scale_invariant(self, rng):
        h = complex_normal((8, 2), rng)
        scaled = h * np.array([1e-6, 3e2])
        np.testing.assert_allclose(zf_directions(scaled), zf_directions(h), atol=1e-10)

    def test_rank_deficient(self, rng):
        h = complex_normal((8, 1), rng)
        with pytest.raises(NumericalError):
            zf_directions(np.hstack([h, 2 * h]))

    def test_too_many_streams(self, rng):
        with pytest.raises(NumericalError):
            zf_directions(complex_normal((2, 3), rng))

    def test_equal_power_split(self, rng):
        pre = zf_precoders([complex_normal(8, rng) for _ in range(2)], 0.25)
        np.testing.assert_array_equal(pre.power, [0.125, 0.125])
        assert pre.f.shape == (8, 2)


class TestTypicalSinr:
    def test_perfect_csi_has_no_self_interference(self, rng):
        for _ in range(50):
            m, k, h = random_instance(rng)
            f = zf_directions(h)
            bd = typical_ue_sinr(h[:, 0], np.zeros(m), f, 0, 1.0)
            assert bd.self_interference == 0.0
            assert bd.intra_cell < 1e-20

    def test_single_link_closed_form(self, rng):
        h = complex_normal(4, rng)
        f = zf_directions(h[:, None])
        bd = typical_ue_sinr(h, np.zeros(4), f, 0, 2.0, noise=0.5)
        assert bd.signal == pytest.approx(2.0 * np.sum(np.abs(h) ** 2), rel=1e-12)
        assert bd.sinr == pytest.approx(bd.signal / 0.5)

    def test_interferer_terms(self, rng):
        h = complex_normal(4, rng)
        g = complex_normal((2, 4), rng)
        fi = complex_normal((2, 4, 1), rng)
        fi /= np.linalg.norm(fi, axis=1, keepdims=True)
        bd = typical_ue_sinr(h, np.zeros(4), zf_directions(h[:, None]), 0, 1.0,
                             [(g, fi, np.array([0.3, 0.7]))], 0.0)
        expect = sum(p * abs(np.vdot(g[i], fi[i, :, 0])) ** 2 for i, p in enumerate([0.3, 0.7]))
        assert bd.inter_cell == pytest.approx(expect, rel=1e-12)

    def test_estimation_error_leaks(self, rng):
        h_bar = complex_normal((8, 2), rng)
        err = 0.1 * complex_normal(8, rng)
        f = zf_directions(h_bar)
        bd = typical_ue_sinr(h_bar[:, 0], err, f, 0, 1.0)
        assert bd.self_interference == pytest.approx(abs(np.vdot(err, f[:, 0])) ** 2)
        assert bd.intra_cell == pytest.approx(abs(np.vdot(err, f[:, 1])) ** 2, rel=1e-9)
        assert bd.interference == pytest.approx(bd.self_interference + bd.intra_cell)
