import math

import numpy as np
import pytest

from rotcma.metrics import resolve_ambiguity, ser, sinr
from rotcma.signals import gen_sources, make_constellation

from oracles import best_permutation_correlation, sinr_direct


def _unitary(M, rng):
    X = rng.normal(size=(M, M)) + 1j * rng.normal(size=(M, M))
    Q, _ = np.linalg.qr(X)
    return Q


class TestResolveAmbiguity:
    def test_identity(self):
        c = make_constellation("psk8")
        S = gen_sources(3, 40, c, 0)
        amb, aligned = resolve_ambiguity(S.copy(), S)
        assert amb.permutation == (0, 1, 2)
        assert np.allclose(amb.scales, 1.0)
        assert np.allclose(aligned, S)

    def test_swap_and_scale(self):
        c = make_constellation("psk8")
        S = gen_sources(2, 64, c, 1)
        scale = 2.0 * np.exp(1j * np.pi / 4)
        Z = scale * S[[1, 0], :]
        amb, aligned = resolve_ambiguity(Z, S)
        assert amb.permutation == (1, 0)
        assert np.allclose(amb.scales, 0.5 * np.exp(-1j * np.pi / 4))
        assert np.allclose(aligned, S)

    def test_zero_row_scale(self):
        c = make_constellation("psk8")
        S = gen_sources(2, 32, c, 2)
        Z = S.copy()
        Z[1, :] = 0.0
        amb, aligned = resolve_ambiguity(Z, S)
        assert amb.scales[amb.permutation.index(1)] == 0.0 or 0.0 in amb.scales

    def test_greedy_matches_exhaustive_on_unitary_mixes(self):
        rng = np.random.default_rng(3)
        c = make_constellation("psk8")
        for M in (2, 3, 4, 5, 6):
            for _ in range(20):
                S = gen_sources(M, 200, c, rng)
                Z = _unitary(M, rng) @ S
                amb, _ = resolve_ambiguity(Z, S)
                zn = np.linalg.norm(Z, axis=1)
                sn = np.linalg.norm(S, axis=1)
                corr = np.abs(S @ Z.conj().T) / np.outer(sn, zn)
                greedy_total = sum(corr[i, amb.permutation[i]] for i in range(M))
                best = best_permutation_correlation(Z, S)
                assert greedy_total >= best - 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            resolve_ambiguity(np.zeros((2, 3)), np.zeros((3, 3)))


class TestSer:
    def test_perfect(self):
        c = make_constellation("psk8")
        S = gen_sources(3, 100, c, 4)
        assert ser(S.copy(), S, c) == 0.0

    def test_antipodal_psk8(self):
        c = make_constellation("psk8")
        S = gen_sources(3, 100, c, 5)
        assert ser(-S, S, c) == 1.0

    def test_tiny_noise(self):
        c = make_constellation("qam16")
        S = gen_sources(2, 500, c, 6)
        assert ser(S + 1e-6, S, c) == 0.0

    def test_phase_symmetry_absorbed_by_alignment(self):
        # rotating rows by a constellation symmetry before alignment does not
        # change the symbol error rate
        rng = np.random.default_rng(7)
        c = make_constellation("psk8")
        S = gen_sources(3, 200, c, 8)
        Z = S + 0.05 * (rng.normal(size=S.shape) + 1j * rng.normal(size=S.shape))
        _, al0 = resolve_ambiguity(Z, S)
        phases = np.exp(2j * np.pi * np.array([1, 3, 5]) / 8.0)
        _, al1 = resolve_ambiguity(phases[:, None] * Z, S)
        assert ser(al0, S, c) == ser(al1, S, c)


class TestSinr:
    def test_inverse_channel(self):
        rng = np.random.default_rng(9)
        A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        W = np.linalg.inv(A)
        per, avg = sinr(W, A, 0.01)
        expect = [1.0 / (0.01 * np.linalg.norm(W[k]) ** 2) for k in range(3)]
        assert np.allclose(per, expect)
        assert avg == pytest.approx(np.mean(expect))

    def test_zero_separator(self):
        per, avg = sinr(np.zeros((2, 2)), np.eye(2), 0.1)
        assert per == [0.0, 0.0] and avg == 0.0

    def test_perfect_noiseless_is_inf(self):
        per, avg = sinr(np.eye(2), np.eye(2), 0.0)
        assert all(math.isinf(v) for v in per)
        assert math.isinf(avg)

    def test_matches_direct_reimplementation(self):
        rng = np.random.default_rng(10)
        for _ in range(100):
            M = int(rng.integers(2, 6))
            A = rng.normal(size=(M, M)) + 1j * rng.normal(size=(M, M))
            W = rng.normal(size=(M, M)) + 1j * rng.normal(size=(M, M))
            nv = float(rng.uniform(0.001, 1.0))
            per, avg = sinr(W, A, nv)
            per_o, avg_o = sinr_direct(W, A, nv)
            assert np.allclose(per, per_o)
            assert avg == pytest.approx(avg_o)

    def test_row_permutation_invariance(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            M = 4
            A = rng.normal(size=(M, M)) + 1j * rng.normal(size=(M, M))
            W = rng.normal(size=(M, M)) + 1j * rng.normal(size=(M, M))
            _, avg = sinr(W, A, 0.05)
            perm = rng.permutation(M)
            _, avg_p = sinr(W[perm], A, 0.05)
            assert avg == pytest.approx(avg_p)
