import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from centralspec.numerics import RngStream, matrix_exp, quad_periodic
from centralspec.spherical import (
    QuadratureError,
    SpectralParam,
    infinitesimal_iwasawa,
    iwasawa_a_projection,
    ks_discrete,
    limit_check,
    phi_lambda,
    psi_lambda,
    pushforward_vs_branching,
    weight_measure_u2,
    write_limit_csv,
)


def bessel_series(lam, x, terms=60):
    # sum (lam x)^(2m) / (m!)^2, written with exact factorials
    z = lam * x
    return sum(z ** (2 * m) / math.factorial(m) ** 2 for m in range(terms))


def ks_to_uniform_discrete(locations, weights, lo, hi):
    # brute-force oracle on a fine grid plus the atom locations themselves
    grid = np.union1d(np.linspace(lo, hi, 200_001), locations)
    cdf = np.array([weights[locations <= g].sum() for g in grid[::50]])
    U = (grid[::50] - lo) / (hi - lo)
    left = np.array([weights[locations < g].sum() for g in grid[::50]])
    return max(np.abs(cdf - U).max(), np.abs(left - U).max())


class TestIwasawa:
    def test_identity(self):
        assert iwasawa_a_projection(np.eye(2)) == 0.0

    def test_diagonal(self):
        assert iwasawa_a_projection(np.diag([math.e, 1 / math.e])) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("theta", np.linspace(0, 2 * np.pi, 7))
    def test_rotation(self, theta):
        k = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        assert abs(iwasawa_a_projection(k)) <= 1e-15

    def test_kan(self):
        # g = k a n with known a-part
        k = np.array([[0.6, -0.8], [0.8, 0.6]])
        a = np.diag([math.exp(0.37), math.exp(-0.37)])
        n = np.array([[1.0, 2.5], [0.0, 1.0]])
        assert iwasawa_a_projection(k @ a @ n) == pytest.approx(0.37, abs=1e-14)

    def test_not_unimodular(self):
        with pytest.raises(ValueError):
            iwasawa_a_projection(np.diag([2.0, 1.0]))

    @pytest.mark.parametrize("x,b", [(0.6, 0.0), (-0.3, 0.4), (1.2, -0.7)])
    def test_infinitesimal(self, x, b):
        # symmetric traceless X = [[x, b], [b, -x]]; its projection onto a is x
        X = np.array([[x, b], [b, -x]])
        assert abs(infinitesimal_iwasawa(X) - x) <= 1e-8


class TestPhi:
    @pytest.mark.parametrize("lam", [-2.0, 0.0, 0.3, 5.0])
    def test_origin(self, lam):
        assert phi_lambda(lam, 0.0) == 1.0
        assert psi_lambda(lam, 0.0) == 1.0

    def test_rho_constant(self):
        p = SpectralParam(0.5)
        for x in (0.2, 0.7, 1.5):
            assert abs(phi_lambda(p, x) - 1.0) <= 1e-12

    def test_against_doubled_quadrature(self):
        # independent evaluation of the defining integral at many more nodes
        lam, x = 1.3, 0.7
        f = lambda th: np.exp((2 * lam - 1) * 0.5 * np.log(np.exp(2 * x) * np.cos(th) ** 2
                                                           + np.exp(-2 * x) * np.sin(th) ** 2))
        ref = quad_periodic(f, 4096) / (2 * np.pi)
        assert abs(phi_lambda(lam, x) - ref) <= 1e-10

    def test_against_matrix_route(self):
        # same integrand through the Iwasawa projection of exp(X) k_theta
        lam, x = 0.9, 0.4
        g = matrix_exp(np.diag([x, -x]))
        vals = []
        for th in 2 * np.pi * np.arange(256) / 256:
            k = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
            vals.append(math.exp(2 * (lam - 0.5) * iwasawa_a_projection(g @ k)))
        assert abs(np.mean(vals) - phi_lambda(lam, x)) <= 1e-12

    @pytest.mark.parametrize("lam", [0.3, 1.1, 2.5])
    def test_weyl_symmetry(self, lam):
        assert abs(phi_lambda(lam, 0.7) - phi_lambda(-lam, 0.7)) <= 1e-8

    def test_node_minimum(self):
        with pytest.raises(ValueError):
            phi_lambda(1.0, 0.5, n_nodes=16)

    def test_quadrature_failure_reported(self):
        # a peak of width ~exp(-2x) is out of reach of the node-doubling budget
        with pytest.raises(QuadratureError):
            phi_lambda(-3.0, 12.0)
        with pytest.raises(QuadratureError):
            phi_lambda(400.0, 9.0)

    def test_unstable_rows_flagged(self):
        rows = limit_check(-3.0, 12.0, [1, 2])
        assert not rows[0].stable and math.isnan(rows[0].error)

    def test_full_output(self):
        v, nodes, change = phi_lambda(0.8, 0.6, full=True)
        assert nodes >= 64 and change <= 1e-13 * max(1, v)


class TestPsi:
    def test_bessel_half(self):
        assert abs(psi_lambda(1.0, 0.5) - bessel_series(1.0, 0.5)) <= 1e-12

    def test_bessel_random(self):
        rng = np.random.default_rng(0)
        for lam, x in rng.uniform(-2, 2, (10, 2)):
            assert abs(psi_lambda(lam, x) - bessel_series(lam, x)) <= 1e-10

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-3, 3), st.floats(-2, 2))
    def test_even(self, lam, x):
        v = psi_lambda(lam, x)
        assert v == pytest.approx(psi_lambda(-lam, x), rel=1e-13)
        assert v == pytest.approx(psi_lambda(lam, -x), rel=1e-13)


class TestLimit:
    def test_zero_point(self):
        rows = limit_check(0.8, 0.0, [2, 4, 8])
        assert all(r.error == 0.0 for r in rows)

    def test_reference_case(self):
        rows = limit_check(0.8, 0.6, [2, 4, 8, 16, 32, 64])
        e = [r.error for r in rows]
        assert e[-1] < e[0] and e[-1] <= 1e-2
        assert all(r.stable for r in rows)

    def test_monotone_random(self):
        rng = np.random.default_rng(1)
        accepted = 0
        while accepted < 5:
            lam, x = rng.uniform(-2, 2, 2)
            if abs(lam * x) > 1:
                continue
            accepted += 1
            e = [r.error for r in limit_check(lam, x, [4, 8, 16, 32, 64])]
            ups = [b - a for a, b in zip(e, e[1:]) if b > a]
            assert len(ups) <= 1 and all(u <= 1e-10 for u in ups)
            assert e[-1] <= 1e-2

    def test_second_order_rate(self):
        e = [r.error for r in limit_check(0.8, 0.6, [16, 32, 64])]
        assert 3.5 <= e[0] / e[1] <= 4.5 and 3.5 <= e[1] / e[2] <= 4.5

    def test_lambda_zero(self):
        # psi_0 = 1 and phi_0(exp(X/n)) -> 1 as n grows
        e = [r.error for r in limit_check(0.0, 1.0, [2, 4, 8, 16, 32, 64])]
        assert all(b < a for a, b in zip(e, e[1:]))
        assert e[-1] <= 1e-4

    def test_empty(self):
        with pytest.raises(ValueError):
            limit_check(1.0, 1.0, [])

    def test_csv(self, tmp_path):
        write_limit_csv(limit_check(0.8, 0.6, [2, 4]), tmp_path / "l.csv")
        lines = (tmp_path / "l.csv").read_text().splitlines()
        assert lines[0] == "n,phi,psi,error,nodes,stable" and len(lines) == 3


class TestWeightMeasure:
    def test_fundamental(self):
        m = weight_measure_u2((1, 0), 1)
        assert [a for a, _ in m.atoms] == [(0, 1), (1, 0)]
        assert all(w == Fraction(1, 2) for _, w in m.atoms)

    @pytest.mark.parametrize("n", [1, 3, 10])
    def test_scalar(self, n):
        m = weight_measure_u2((2, 2), n)
        assert m.atoms == (((2, 2), Fraction(1)),)

    @pytest.mark.parametrize("pq,n", [((1, 0), 7), ((3, 1), 13), ((5, 2), 4)])
    def test_exact_total(self, pq, n):
        m = weight_measure_u2(pq, n)
        assert m.total_weight() == 1
        assert len(m.atoms) == n * (pq[0] - pq[1]) + 1
        assert all(isinstance(w, Fraction) for _, w in m.atoms)

    @pytest.mark.parametrize("pq,n", [((1, 0), 5), ((1, 0), 50), ((3, 1), 20)])
    def test_riemann_bound(self, pq, n):
        p, q = pq
        loc, w = weight_measure_u2(pq, n).first_coordinate()
        assert ks_to_uniform_discrete(loc, w, q, p) <= 2 / (n * (p - q))

    def test_invalid(self):
        with pytest.raises(ValueError):
            weight_measure_u2((0, 1), 3)


class TestKSDiscrete:
    def test_identical(self):
        assert ks_discrete([0.0, 1.0, 1.0, 2.0], [0.0, 1.0, 2.0], [0.25, 0.5, 0.25]) == 0.0

    def test_shifted(self):
        assert ks_discrete([0.0] * 10, [1.0], [1.0]) == 1.0

    def test_against_scipy_continuous_limit(self):
        from scipy import stats
        x = np.random.default_rng(2).uniform(size=2000)
        loc = np.linspace(0, 1, 100_001)
        w = np.full(loc.size, 1 / loc.size)
        assert abs(ks_discrete(x, loc, w) - stats.kstest(x, "uniform").statistic) <= 2e-5


class TestPushforwardVsBranching:
    @pytest.mark.parametrize("pq", [(1, 0), (3, 1)])
    def test_pass(self, pq):
        r = pushforward_vs_branching(pq, 200, 100_000, rng=RngStream(3))
        assert r["passed"] and r["ks"] <= 0.02

    def test_degenerate(self):
        r = pushforward_vs_branching((2, 2), 5, 1000, rng=RngStream(4))
        assert r["ks"] == 0.0 and r["passed"]

    def test_workers(self):
        a = pushforward_vs_branching((3, 1), 50, 10_000, rng=RngStream(5), workers=1)
        b = pushforward_vs_branching((3, 1), 50, 10_000, rng=RngStream(5), workers=4)
        assert a == b
