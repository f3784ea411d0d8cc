import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from centralspec.numerics import (
    ContractViolation,
    RngStream,
    haar_orthogonal,
    haar_unitary_commutant,
    matrix_exp,
    quad_periodic,
    realify,
    sym_eigen,
    unitary_frame,
)


def bessel_i0_series(x, terms=40):
    # independent oracle: I0(x) = sum (x/2)^(2k) / (k!)^2
    return sum((x / 2) ** (2 * k) / math.factorial(k) ** 2 for k in range(terms))


def sym_matrices(n):
    return st.lists(st.floats(-10, 10), min_size=n * n, max_size=n * n).map(
        lambda v: (lambda A: A + A.T)(np.reshape(v, (n, n))))


class TestRngStream:
    def test_reproducible(self):
        a = RngStream(5, 3).generator().standard_normal(10)
        b = RngStream(5, 3).generator().standard_normal(10)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = RngStream(5, 0).generator().standard_normal(10)
        b = RngStream(5, 1).generator().standard_normal(10)
        c = RngStream(6, 0).generator().standard_normal(10)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_substream_tree(self):
        s = RngStream(1)
        assert s.substream(2).key == (0, 2)
        assert s.substream(2).substream(4).key == (0, 2, 4)
        x = s.substream(2).generator().random()
        assert x == RngStream(1).substream(2).generator().random()


class TestSymEigen:
    def test_identity(self):
        w, _ = sym_eigen(np.eye(3))
        assert np.array_equal(w, [1, 1, 1])

    def test_diagonal_descending(self):
        w, _ = sym_eigen(np.diag([1.0, 3.0]))
        assert np.allclose(w, [3, 1])

    def test_reconstruction_random(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((6, 6))
        S = A + A.T
        w, V = sym_eigen(S)
        assert np.max(np.abs(V @ np.diag(w) @ V.T - S)) <= 1e-10
        assert np.all(np.diff(w) <= 0)
        for i in range(6):
            assert np.linalg.norm(S @ V[:, i] - w[i] * V[:, i]) <= 1e-10 * np.linalg.norm(S, 2)

    def test_nonsymmetric_rejected(self):
        with pytest.raises(ContractViolation):
            sym_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))

    @settings(max_examples=50, deadline=None)
    @given(sym_matrices(4))
    def test_trace_property(self, S):
        w, _ = sym_eigen(S)
        assert abs(w.sum() - np.trace(S)) <= 1e-10 * (1 + abs(np.trace(S))) + 1e-12 * np.abs(S).sum()


class TestMatrixExp:
    def test_zero(self):
        assert np.array_equal(matrix_exp(np.zeros((3, 3))), np.eye(3))

    def test_quarter_turn(self):
        J2 = np.array([[0.0, -1.0], [1.0, 0.0]])
        assert np.allclose(matrix_exp(0.5 * np.pi * J2), J2, atol=1e-15)

    def test_skew_is_orthogonal(self):
        rng = np.random.default_rng(1)
        A = rng.standard_normal((5, 5))
        Q = matrix_exp(A - A.T)
        assert np.max(np.abs(Q.T @ Q - np.eye(5))) <= 1e-10

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 6))
    def test_inverse_property(self, seed, n):
        A = np.random.default_rng(seed).standard_normal((n, n))
        A *= 5 / max(np.linalg.norm(A, 2), 1e-300)
        assert np.max(np.abs(matrix_exp(A) @ matrix_exp(-A) - np.eye(n))) <= 1e-10

    def test_nonfinite(self):
        with pytest.raises(ContractViolation):
            matrix_exp(np.array([[np.nan]]))


class TestHaarOrthogonal:
    def test_n1_signs(self):
        Q = haar_orthogonal(RngStream(0), 1, size=100_000)
        frac = np.mean(Q[:, 0, 0] > 0)
        assert 0.49 <= frac <= 0.51
        assert set(np.unique(Q)) == {-1.0, 1.0}

    def test_column_mean(self):
        Q = haar_orthogonal(RngStream(1), 3, size=10_000)
        assert abs(Q[:, 0, 0].mean()) <= 0.02

    def test_orthogonal(self):
        Q = haar_orthogonal(RngStream(2), 5, size=50)
        err = np.abs(np.swapaxes(Q, 1, 2) @ Q - np.eye(5)).max()
        assert err <= 1e-10

    def test_left_invariance(self):
        P = haar_orthogonal(RngStream(99), 3)
        Q = haar_orthogonal(RngStream(3), 3, size=10_000)
        PQ = P @ Q
        # entries of a Haar column have variance 1/n; compare column means at 3 sigma
        sigma = math.sqrt(1 / 3 / len(Q))
        assert np.all(np.abs(PQ[:, :, 0].mean(axis=0)) <= 3 * sigma + 1e-3)
        assert np.all(np.abs(Q[:, :, 0].mean(axis=0)) <= 3 * sigma + 1e-3)

    def test_second_moment(self):
        # E[Q11^2] = 1/n for Haar
        Q = haar_orthogonal(RngStream(4), 4, size=20_000)
        assert abs(np.mean(Q[:, 0, 0] ** 2) - 0.25) <= 0.01


class TestHaarUnitary:
    def test_realify_multiplies(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        B = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        assert np.allclose(realify(A @ B), realify(A) @ realify(B))
        assert np.allclose(realify(1j * np.eye(2)), [[0, -1, 0, 0], [1, 0, 0, 0],
                                                      [0, 0, 0, -1], [0, 0, 1, 0]])

    def test_plane_rotation_uniform(self):
        j = np.array([[0.0, -1.0], [1.0, 0.0]])
        Q = haar_unitary_commutant(RngStream(5), j, size=100_000)
        angles = np.mod(np.arctan2(Q[:, 1, 0], Q[:, 0, 0]), 2 * np.pi)
        assert stats.kstest(angles / (2 * np.pi), "uniform").statistic <= 0.02
        assert np.allclose(Q[:, 0, 0], Q[:, 1, 1]) and np.allclose(Q[:, 0, 1], -Q[:, 1, 0])

    def test_commutes_with_random_structure(self):
        k = haar_orthogonal(RngStream(6), 6)
        j0 = np.kron(np.eye(3), [[0.0, -1.0], [1.0, 0.0]])
        j = k.T @ j0 @ k
        P = unitary_frame(j)
        assert np.abs(j @ P - P @ j0).max() <= 1e-12
        Q = haar_unitary_commutant(RngStream(7), j, size=200)
        assert np.abs(Q @ j - j @ Q).max() <= 1e-10
        assert np.abs(np.swapaxes(Q, 1, 2) @ Q - np.eye(6)).max() <= 1e-10

    def test_first_column_norm(self):
        j = np.kron(np.eye(2), [[0.0, -1.0], [1.0, 0.0]])
        Q = haar_unitary_commutant(RngStream(8), j, size=10_000)
        assert abs(np.mean(np.sum(Q[:, :, 0] ** 2, axis=1)) - 1) <= 1e-12

    def test_rejects_bad_structure(self):
        with pytest.raises(ContractViolation):
            haar_unitary_commutant(RngStream(0), np.eye(2))


class TestQuadPeriodic:
    def test_cos(self):
        assert abs(quad_periodic(np.cos, 64)) <= 1e-14

    def test_constant(self):
        assert abs(quad_periodic(lambda t: np.ones_like(t), 64) - 2 * np.pi) <= 1e-14

    def test_exp_cos_bessel(self):
        val = quad_periodic(lambda t: np.exp(np.cos(t)), 64)
        assert abs(val - 2 * np.pi * bessel_i0_series(1.0)) <= 1e-12

    def test_scalar_callable(self):
        assert abs(quad_periodic(lambda t: math.cos(t) ** 2, 16) - np.pi) <= 1e-14

    def test_too_few_nodes(self):
        with pytest.raises(ContractViolation):
            quad_periodic(np.cos, 1)

    def test_geometric_decay(self):
        exact = 2 * np.pi * bessel_i0_series(3.0)
        errs = [abs(quad_periodic(lambda t: np.exp(3 * np.cos(t)), n) - exact) for n in (4, 8, 12)]
        assert errs[1] <= 0.1 * errs[0] and errs[2] <= 0.1 * errs[1]
