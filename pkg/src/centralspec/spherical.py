"""Rank-one spherical functions and the U(2) branching measure.

The symmetric pair is ``G = SL(2, R)``, ``K = SO(2)``, with flat
``a = {diag(x, -x)}``. Elements of ``a`` and of its dual are identified
through the trace form, ``(diag(s, -s), diag(t, -t)) = 2 s t``. In these
coordinates the positive root is ``1`` and the half-sum ``rho`` is
``1/2``, so

    phi_lam(exp X) = (1/2pi) int exp(2 (lam - rho) A(exp(X) k_theta)) dtheta
    psi_lam(X)     = (1/2pi) int exp(2 lam x cos(2 theta)) dtheta

with ``A(g) = log |g e_1|`` the Iwasawa projection. ``phi_rho`` is the
constant 1 and ``phi_lam = phi_{-lam}``.
"""

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _io
from .numerics import matrix_exp, quad_periodic

__all__ = [
    "QuadratureError",
    "SpectralParam",
    "iwasawa_a_projection",
    "phi_lambda",
    "psi_lambda",
    "LimitRow",
    "limit_check",
    "write_limit_csv",
    "infinitesimal_iwasawa",
    "BranchingMeasure",
    "weight_measure_u2",
    "ks_discrete",
    "pushforward_vs_branching",
]

RHO = 0.5


class QuadratureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SpectralParam:
    """Spectral parameter ``lam`` and Weyl vector ``rho`` in trace-form coordinates."""

    lam: float
    rho: float = RHO


def iwasawa_a_projection(g):
    """``t`` with ``g = k diag(e^t, e^-t) n``, i.e. ``t = log |g e_1|``."""
    g = np.asarray(g, dtype=float)
    if g.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    if abs(np.linalg.det(g) - 1.0) > 1e-12 * max(1.0, float(np.sum(g * g))):
        raise ValueError("matrix is not unimodular")
    return float(np.log(np.hypot(g[0, 0], g[1, 0])))


def _a_of_exp_x_k(x, theta):
    # A(diag(e^x, e^-x) k_theta), vectorised over theta
    # written as log1p(...) so that x = 0 gives exactly 0
    c, s = np.cos(theta), np.sin(theta)
    return 0.5 * np.log1p(np.expm1(2 * x) * c * c + np.expm1(-2 * x) * s * s)


def _quad(f, n_nodes, max_nodes=1 << 16, tol=1e-13, fail=1e-8):
    """Trapezoid with node doubling until two levels agree to ``tol``."""
    if n_nodes < 32:
        raise ValueError("need at least 32 quadrature nodes")
    n = int(n_nodes)
    prev = quad_periodic(f, n) / (2 * math.pi)
    while True:
        cur = quad_periodic(f, 2 * n) / (2 * math.pi)
        if not math.isfinite(cur):
            raise QuadratureError("integrand overflows")
        change = abs(cur - prev)
        n *= 2
        if change <= tol * max(1.0, abs(cur)):
            return cur, n, change
        if 2 * n > max_nodes:
            if change > fail * max(1.0, abs(cur)):
                raise QuadratureError(f"no convergence at {n} nodes (change {change:.2e})")
            return cur, n, change
        prev = cur


def phi_lambda(p, x, n_nodes=64, full=False):
    """Harish-Chandra integral for the elementary spherical function.

    Returns the value, or ``(value, nodes, last_change)`` with ``full``.
    """
    p = p if isinstance(p, SpectralParam) else SpectralParam(p)
    s = 2.0 * (p.lam - p.rho)
    with np.errstate(over="ignore"):
        out = _quad(lambda th: np.exp(s * _a_of_exp_x_k(x, th)), n_nodes)
    return out if full else out[0]


def psi_lambda(p, x, n_nodes=64, full=False):
    """Symmetrized plane wave ``(1/2pi) int exp(2 lam x cos 2 theta)``."""
    lam = p.lam if isinstance(p, SpectralParam) else float(p)
    with np.errstate(over="ignore"):
        out = _quad(lambda th: np.exp(2.0 * lam * x * np.cos(2.0 * th)), n_nodes)
    return out if full else out[0]


@dataclass(frozen=True)
class LimitRow:
    n: int
    phi: float
    psi: float
    error: float
    nodes: int
    stable: bool


def limit_check(p, x, n_list, n_nodes=64):
    """Errors ``|phi_{n lam}(exp(X / n)) - psi_lam(X)|`` for each ``n``.

    Quadrature failures are reported per row (``stable=False``, ``nan``
    values) rather than raised.
    """
    p = p if isinstance(p, SpectralParam) else SpectralParam(p)
    if not len(n_list):
        raise ValueError("n_list is empty")
    psi = psi_lambda(p, x, n_nodes)
    rows = []
    for n in n_list:
        try:
            phi, nodes, _ = phi_lambda(SpectralParam(n * p.lam, p.rho), x / n, n_nodes, full=True)
            rows.append(LimitRow(int(n), phi, psi, abs(phi - psi), nodes, True))
        except QuadratureError:
            rows.append(LimitRow(int(n), math.nan, psi, math.nan, 0, False))
    return rows


def write_limit_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "phi", "psi", "error", "nodes", "stable"])
        for r in rows:
            w.writerow([r.n, _io.fmt(r.phi), _io.fmt(r.psi), _io.fmt(r.error), r.nodes,
                        int(r.stable)])


def infinitesimal_iwasawa(X, h=1e-3):
    """``d/dt A(exp(t X))`` at ``t = 0`` by a fourth-order central difference.

    For symmetric traceless ``X`` this equals the orthogonal projection of
    ``X`` onto ``a``, i.e. ``X[0, 0]``.
    """
    X = np.asarray(X, dtype=float)
    f = lambda t: iwasawa_a_projection(matrix_exp(t * X))
    return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h)


@dataclass(frozen=True)
class BranchingMeasure:
    """Atoms ``(location, weight)`` with exact rational data."""

    level: int
    atoms: tuple

    def total_weight(self):
        return sum((w for _, w in self.atoms), Fraction(0))

    def first_coordinate(self):
        loc = np.array([float(a[0]) for a, _ in self.atoms])
        wts = np.array([float(w) for _, w in self.atoms])
        return loc, wts


def weight_measure_u2(lambda_prime, n):
    """Normalized weight measure of the U(2) irreducible of highest weight ``n (p, q)``.

    Weights ``(k, n(p+q) - k)`` for ``k = nq .. np`` all have multiplicity
    one; atoms sit at the weights divided by ``n``.
    """
    p, q = (int(v) for v in lambda_prime)
    if p < q:
        raise ValueError("need p >= q")
    if n < 1:
        raise ValueError("level must be positive")
    count = n * (p - q) + 1
    w = Fraction(1, count)
    atoms = tuple(((Fraction(k, n), Fraction(n * (p + q) - k, n)), w)
                  for k in range(n * q, n * p + 1))
    return BranchingMeasure(n, atoms)


def ks_discrete(samples, locations, weights):
    """KS distance between the empirical law of ``samples`` and a discrete law.

    Both CDFs are right-continuous step functions, so the supremum is
    attained at one of their jump points.
    """
    x = np.sort(np.ravel(samples))
    order = np.argsort(locations)
    loc = np.asarray(locations, dtype=float)[order]
    cw = np.cumsum(np.asarray(weights, dtype=float)[order])
    pts = np.union1d(x, loc)
    F = np.searchsorted(x, pts, side="right") / len(x)
    idx = np.searchsorted(loc, pts, side="right")
    G = np.where(idx > 0, cw[np.maximum(idx - 1, 0)], 0.0)
    return float(np.max(np.abs(F - G)))


def pushforward_vs_branching(lambda_prime, n, N, rng=None, workers=None, bins=None,
                             return_measure=False):
    """Compare the sampled U(2) orbit pushforward with the level-``n`` weight measure.

    Passes iff the KS distance is at most ``max(0.02, 2 / (n (p - q)))``.
    With ``return_measure`` the sampled :class:`EmpiricalMeasure` is
    returned as well.
    """
    from .momentmap import complex_orbit_pushforward

    p, q = (int(v) for v in lambda_prime)
    meas = weight_measure_u2((p, q), n)
    loc, wts = meas.first_coordinate()
    emp = complex_orbit_pushforward((p, q), N, bins=bins, rng=rng, workers=workers)
    ks = ks_discrete(emp.samples, loc, wts)
    threshold = 0.02 if p == q else max(0.02, 2.0 / (n * (p - q)))
    report = {"lambda_prime": [p, q], "level": n, "n_samples": int(N), "ks": ks,
              "threshold": threshold, "passed": bool(ks <= threshold)}
    return (report, emp) if return_measure else report
