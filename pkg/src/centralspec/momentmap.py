"""Spectra of angular momenta of rigid motions and the real moment map.

For an inertia operator ``X`` on ``E`` (``dim E = 2d``) and a compatible
complex structure ``J`` the operator ``K = X + J X J^T`` commutes with
``J``; its ``2d`` real eigenvalues come in equal pairs and the ``d``
pair values, sorted descending, form the real spectrum. Letting ``J`` run
over all compatible structures is the same as fixing ``j`` and letting
``X`` run over its orthogonal conjugacy class, which turns the question
into the image of the projection ``Y -> (Y + j Y j^T) / 2``.
"""

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.optimize import minimize
from scipy.spatial import ConvexHull

from . import _io
from .numerics import (
    ContractViolation,
    RngStream,
    as_generator,
    haar_orthogonal,
    haar_unitary_commutant,
    matrix_exp,
)

__all__ = [
    "SpectrumPairingError",
    "check_complex_structure",
    "standard_complex_structure",
    "random_complex_structure",
    "inertia_operator",
    "k_operator",
    "real_spectrum",
    "real_moment_map",
    "sample_spectra",
    "trace_basis",
    "PolytopeEstimate",
    "hull_estimate",
    "support_width",
    "AchieveResult",
    "achieve_spectrum",
    "power_fake_map",
    "AuditReport",
    "convexity_audit",
    "EmpiricalMeasure",
    "pushforward_histogram",
    "complex_orbit_pushforward",
    "ks_uniform",
    "default_workers",
    "write_samples_csv",
]

CHUNK = 4096


class SpectrumPairingError(ArithmeticError):
    """Eigenvalues of ``K`` failed to pair up within tolerance."""

    def __init__(self, msg, eigenvalues):
        super().__init__(f"{msg}; eigenvalues = {np.array2string(np.asarray(eigenvalues), precision=17)}")
        self.eigenvalues = np.asarray(eigenvalues)


def default_workers():
    return max(1, int(os.environ.get("CENTRALSPEC_THREADS", "1")))


def check_complex_structure(J, tol=1e-10):
    """Validate ``J`` (skew, orthogonal, even size) and return it as an array."""
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1] or J.shape[0] % 2:
        raise ContractViolation("complex structure must be square of even size")
    I = np.eye(J.shape[0])
    if np.max(np.abs(J @ J + I)) > tol or np.max(np.abs(J.T @ J - I)) > tol:
        raise ContractViolation("J must satisfy J^2 = -I and J^T J = I")
    return J


def standard_complex_structure(d):
    """Block-diagonal ``j`` with ``d`` blocks ``[[0, -1], [1, 0]]``."""
    if d < 1:
        raise ValueError("d must be positive")
    j = np.zeros((2 * d, 2 * d))
    for k in range(d):
        j[2 * k, 2 * k + 1] = -1.0
        j[2 * k + 1, 2 * k] = 1.0
    return j


def random_complex_structure(rng, d, size=None):
    """``k^T j k`` with ``k`` Haar on ``O(2d)``; both components of structures occur."""
    j = standard_complex_structure(d)
    k = haar_orthogonal(rng, 2 * d, size=size)
    return np.swapaxes(k, -1, -2) @ j @ k


def inertia_operator(x, m):
    """``X = sum_k m_k x_k x_k^T`` for positions ``x`` of shape ``(n, dim)``."""
    x = np.asarray(x, dtype=float)
    m = np.asarray(m, dtype=float)
    return x.T @ (m[:, None] * x)


def _dims(X, J):
    X = np.asarray(X, dtype=float)
    J = np.asarray(J, dtype=float)
    if X.shape[-1] != J.shape[-1] or X.shape[-2] != J.shape[-2]:
        raise ValueError("X and J differ in dimension")
    return X, J


def k_operator(X, J):
    X, J = _dims(X, J)
    return X + J @ X @ np.swapaxes(J, -1, -2)


def _pair(w, rtol=1e-8):
    """Pair descending eigenvalues ``w[..., 2d]`` into ``d`` values."""
    w = w[..., ::-1]
    a, b = w[..., 0::2], w[..., 1::2]
    scale = np.max(np.abs(w), axis=-1, keepdims=True)
    gap = np.abs(a - b)
    bad = np.any(gap > rtol * np.maximum(scale, 1e-300), axis=-1)
    return 0.5 * (a + b), bad


def real_spectrum(X, J, rtol=1e-8):
    """Real spectrum of the angular momentum: paired eigenvalues of ``K``.

    Raises
    ------
    SpectrumPairingError
        If consecutive sorted eigenvalues of ``K`` differ by more than
        ``rtol * ||K||_2``.
    """
    K = k_operator(X, J)
    if K.shape[-1] == 2:
        # K = tr(X) I exactly in the plane
        return np.trace(np.asarray(X, dtype=float), axis1=-2, axis2=-1)[..., None]
    w = np.linalg.eigvalsh(K)
    vals, bad = _pair(w, rtol)
    if np.any(bad):
        raise SpectrumPairingError("eigenvalues of K do not pair", w[..., ::-1])
    return vals


def real_moment_map(Y, j):
    """Orthogonal projection ``(Y + j Y j^T) / 2`` onto operators commuting with ``j``."""
    Y, j = _dims(Y, j)
    return 0.5 * (Y + j @ Y @ np.swapaxes(j, -1, -2))


def _chunk_spectra(X, j, gen, count):
    if X.shape[0] == 2:
        return np.full((count, 1), np.trace(X))
    Q = haar_orthogonal(gen, X.shape[0], size=count)
    Y = Q @ X @ np.swapaxes(Q, 1, 2)
    return real_spectrum(Y, j)


def _stream(rng):
    if isinstance(rng, RngStream):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return RngStream(0 if rng is None else int(rng))
    return None


def _chunked(rng, N, work, workers):
    """Run ``work(gen, count)`` over fixed-size chunks on disjoint substreams."""
    stream = _stream(rng)
    if stream is None:
        return work(as_generator(rng), N)
    sizes = [min(CHUNK, N - s) for s in range(0, N, CHUNK)]
    jobs = [(stream.substream(i), c) for i, c in enumerate(sizes)]
    workers = default_workers() if workers is None else workers

    def run(job):
        sub, c = job
        return work(sub.generator(), c)

    if workers <= 1 or len(jobs) == 1:
        parts = [run(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, jobs))
    return np.concatenate(parts, axis=0)


def sample_spectra(X, j, N, rng, workers=None):
    """``N`` real spectra of ``k X k^T`` with ``k`` Haar on ``O(2d)``.

    Equivalently, spectra of ``X`` against ``J = k^T j k``; this Haar-induced
    law on complex structures is a modeling choice, not a canonical one.

    With an :class:`RngStream` (or integer seed) the draws are split into
    chunks of 4096 that use substreams ``0, 1, ...``; the result does not
    depend on ``workers``. A :class:`numpy.random.Generator` is consumed
    sequentially instead.

    Returns
    -------
    (N, d) ndarray
    """
    X = np.asarray(X, dtype=float)
    j = check_complex_structure(j)
    if N < 1:
        raise ValueError("N must be positive")
    if X.shape != j.shape:
        raise ValueError("X and j differ in dimension")
    return _chunked(rng, int(N), lambda g, c: _chunk_spectra(X, j, g, c), workers)


def write_samples_csv(samples, path):
    samples = np.atleast_2d(samples)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"nu{i + 1}" for i in range(samples.shape[1])])
        for row in samples:
            w.writerow([_io.fmt(v) for v in row])


def trace_basis(d):
    """Orthonormal basis (columns) of the hyperplane ``sum(nu) = 0`` in R^d."""
    B = np.zeros((d, d - 1))
    for k in range(1, d):
        B[:k, k - 1] = 1.0
        B[k, k - 1] = -k
        B[:, k - 1] /= math.sqrt(k * (k + 1))
    return B


def _monotone_chain(P):
    """Indices of the convex hull of 2-D points, counter-clockwise."""
    order = np.lexsort((P[:, 1], P[:, 0]))

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def half(idx):
        out = []
        for i in idx:
            while len(out) >= 2 and cross(P[out[-2]], P[out[-1]], P[i]) <= 0:
                out.pop()
            out.append(i)
        return out

    lower = half(order)
    upper = half(order[::-1])
    return np.array(lower[:-1] + upper[:-1])


def _seg_dist(p, a, b):
    ab = b - a
    L = ab @ ab
    t = 0.0 if L == 0 else min(1.0, max(0.0, (p - a) @ ab / L))
    return float(np.linalg.norm(p - (a + t * ab)))


@dataclass
class PolytopeEstimate:
    """Convex hull of sampled spectra inside the trace hyperplane.

    ``vertices`` are sample points (rows in R^d). For a planar hull they
    are in counter-clockwise order with respect to the estimate's own
    in-plane frame.
    ``rank`` is the affine dimension of the sample cloud.
    """

    d: int
    trace: float
    vertices: np.ndarray
    n_samples: int
    rank: int = 0
    _frame: tuple = field(default=None, repr=False)

    def _local(self, pts):
        origin, axes = self._frame
        return (np.atleast_2d(pts) - origin) @ axes

    def distance(self, point):
        """Euclidean distance from ``point`` to the hull (0 inside)."""
        p = np.asarray(point, dtype=float)
        if self.rank == 0:
            return float(np.linalg.norm(p - self.vertices[0]))
        origin, axes = self._frame
        q = (p - origin) @ axes
        # distance from the affine hull of the estimate
        out_of_span = float(np.linalg.norm((p - origin) - axes @ q))
        V = self._local(self.vertices)
        if self.rank == 1:
            lo, hi = V[:, 0].min(), V[:, 0].max()
            inplane = max(lo - q[0], q[0] - hi, 0.0)
        elif self.rank == 2:
            inside = True
            m = len(V)
            for i in range(m):
                a, b = V[i], V[(i + 1) % m]
                if (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]) < 0:
                    inside = False
                    break
            inplane = 0.0 if inside else min(_seg_dist(q, V[i], V[(i + 1) % m]) for i in range(m))
        else:
            H = ConvexHull(V)
            viol = H.equations[:, :-1] @ q + H.equations[:, -1]
            if np.all(viol <= 0):
                inplane = 0.0
            else:
                inplane = _dist_polytope_3d(q, V, H)
        return float(math.hypot(inplane, out_of_span))

    def contains(self, point, tol=1e-9):
        return self.distance(point) <= tol

    def hausdorff(self, other):
        """Hausdorff distance between the two hulls.

        Exact for hulls of affine rank up to 2 (the distance to a convex set
        is convex, so the maximum sits at a vertex); for rank 3 the distance
        to the triangulated boundary is used, also exact.
        """
        a = max(other.distance(v) for v in self.vertices)
        b = max(self.distance(v) for v in other.vertices)
        return max(a, b)

    def to_dict(self):
        return {"d": self.d, "trace": self.trace, "n_samples": self.n_samples,
                "rank": self.rank, "vertices": self.vertices}


def _dist_polytope_3d(q, V, H):
    best = np.inf
    for tri in H.simplices:
        best = min(best, _point_triangle(q, *V[tri]))
    return float(best)


def _point_triangle(p, a, b, c):
    # closest point on triangle, after Ericson, Real-Time Collision Detection
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = ab @ ap, ac @ ap
    if d1 <= 0 and d2 <= 0:
        return np.linalg.norm(p - a)
    bp = p - b
    d3, d4 = ab @ bp, ac @ bp
    if d3 >= 0 and d4 <= d3:
        return np.linalg.norm(p - b)
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        return np.linalg.norm(p - (a + d1 / (d1 - d3) * ab))
    cp = p - c
    d5, d6 = ab @ cp, ac @ cp
    if d6 >= 0 and d5 <= d6:
        return np.linalg.norm(p - c)
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        return np.linalg.norm(p - (a + d2 / (d2 - d6) * ac))
    va = d3 * d6 - d5 * d4
    if va <= 0 and d4 - d3 >= 0 and d5 - d6 >= 0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return np.linalg.norm(p - (b + w * (c - b)))
    denom = 1.0 / (va + vb + vc)
    v, w = vb * denom, vc * denom
    return np.linalg.norm(p - (a + ab * v + ac * w))


def hull_estimate(samples, max_d=4):
    """Convex hull of spectra, computed in the trace hyperplane.

    The affine rank of the cloud decides the algorithm: a single point,
    interval endpoints, monotone chain in the plane, or Qhull in 3-D.

    Raises
    ------
    ValueError
        For ``d > max_d`` (use :func:`support_width`) or samples whose
        sums disagree by more than 1e-8.
    """
    S = np.atleast_2d(np.asarray(samples, dtype=float))
    N, d = S.shape
    if d > max_d:
        raise ValueError(f"hull_estimate supports d <= {max_d}; use support_width for d = {d}")
    sums = S.sum(axis=1)
    trace = float(sums.mean())
    if np.max(np.abs(sums - trace)) > 1e-8 * max(1.0, abs(trace)):
        raise ValueError("samples do not lie on a common trace hyperplane")
    origin = S.mean(axis=0)
    C = S - origin
    if d == 1 or float(np.max(np.abs(C))) <= 1e-12 * max(1.0, float(np.max(np.abs(S)))):
        return PolytopeEstimate(d, trace, S[:1].copy(), N, 0, (S[0], np.zeros((d, 0))))
    _, s, Vt = np.linalg.svd(C, full_matrices=False)
    rank = max(1, min(int(np.sum(s > 1e-9 * s[0])), d - 1))
    axes = Vt[:rank].T
    P = C @ axes
    if rank == 1:
        idx = np.array([np.argmin(P[:, 0]), np.argmax(P[:, 0])])
    elif rank == 2:
        idx = _monotone_chain(P)
    else:
        idx = ConvexHull(P).vertices
    return PolytopeEstimate(d, trace, S[idx].copy(), N, rank, (origin, axes))


def support_width(samples, direction):
    """``(min, max)`` of ``<direction, nu>`` over the samples."""
    S = np.atleast_2d(np.asarray(samples, dtype=float))
    if len(S) == 0:
        raise ValueError("no samples")
    u = np.asarray(direction, dtype=float)
    h = S @ u
    return float(h.min()), float(h.max())


def _skew_from(a, n):
    A = np.zeros((n, n))
    A[np.triu_indices(n, 1)] = a
    return A - A.T


@dataclass
class AchieveResult:
    J: np.ndarray
    achieved: np.ndarray
    distance: float
    restarts_used: int = 0
    evaluations: int = 0


def achieve_spectrum(X, target, rng, restarts=16, spectrum_map=None, stop_tol=0.0,
                     max_fev=None, j=None):
    """Search for a complex structure whose real spectrum hits ``target``.

    Minimizes ``||f(spec(X, J)) - target||^2`` over ``J = k^T j k`` with
    ``k = k0 exp(A)``, ``A`` skew, by Nelder-Mead; each restart draws a
    fresh Haar ``k0``. ``f`` is ``spectrum_map`` (identity by default).
    Stops early once the distance is at most ``stop_tol``.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    d = n // 2
    j = standard_complex_structure(d) if j is None else check_complex_structure(j)
    target = np.asarray(target, dtype=float)
    if target.shape != (d,):
        raise ValueError("target has the wrong length")
    if abs(target.sum() - np.trace(X)) > 1e-6 * max(1.0, abs(np.trace(X))):
        raise ValueError("target does not lie on the trace hyperplane of X")
    fmap = (lambda v: v) if spectrum_map is None else spectrum_map
    gen = as_generator(rng)
    npar = n * (n - 1) // 2
    max_fev = 400 * npar + 2000 if max_fev is None else max_fev

    def spec(k):
        J = k.T @ j @ k
        vals, _ = _pair(np.linalg.eigvalsh(X + J @ X @ J.T))
        return J, fmap(vals)

    if d == 1:
        J, v = spec(np.eye(n))
        return AchieveResult(J, v, float(np.linalg.norm(v - target)), 1, 1)

    best = None
    evals = 0
    used = 0
    for _ in range(max(1, restarts)):
        used += 1
        k0 = haar_orthogonal(gen, n)

        def f(a, k0=k0):
            _, v = spec(k0 @ matrix_exp(_skew_from(a, n)))
            return float(np.sum((v - target) ** 2))

        res = minimize(f, np.zeros(npar), method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-24, "maxfev": max_fev,
                                "adaptive": True})
        evals += res.nfev
        if best is None or res.fun < best[0]:
            best = (res.fun, k0 @ matrix_exp(_skew_from(res.x, n)))
        if math.sqrt(best[0]) <= stop_tol:
            break
    J, v = spec(best[1])
    return AchieveResult(J, v, float(np.linalg.norm(v - target)), used, evals)


def power_fake_map(p, trace):
    """``nu -> nu**p`` componentwise, rescaled back onto the trace hyperplane.

    A deliberately distorted spectrum map for testing audit power. Values
    are clipped at 0 before the power.
    """
    def f(v):
        w = np.maximum(np.asarray(v, dtype=float), 0.0) ** p
        return w * trace / np.sum(w, axis=-1, keepdims=True)
    return f


@dataclass
class AuditReport:
    pairs_tested: int
    max_distance: float
    tolerance: float
    passed: bool
    distances: list

    def to_dict(self):
        return {"pairs_tested": self.pairs_tested, "max_distance": self.max_distance,
                "tolerance": self.tolerance, "passed": self.passed,
                "distances": list(self.distances)}


def _audit_pairs(S, n_pairs, gen):
    d = S.shape[1]
    pairs = []
    if d >= 2 and d <= 4:
        try:
            H = hull_estimate(S)
        except ValueError:
            H = None
        if H is not None and len(H.vertices) >= 2:
            V = H.vertices
            m = len(V)
            if H.rank == 2:
                pairs += [(V[i], V[(i + 1) % m]) for i in range(m)]
            else:
                pairs += [(V[i], V[k]) for i in range(m) for k in range(i + 1, m)]
            order = gen.permutation(len(pairs))
            pairs = [pairs[i] for i in order]
    while len(pairs) < n_pairs:
        a, b = gen.integers(len(S), size=2)
        pairs.append((S[a], S[b]))
    return pairs[:n_pairs]


def convexity_audit(X, n_pairs, rng, tol=None, spectrum_map=None, n_pilot=20000,
                    restarts=16):
    """Midpoint-achievability test of the convexity of the spectrum range.

    A pilot sample of ``n_pilot`` spectra (pushed through
    ``spectrum_map``) supplies the pairs: first neighbouring hull vertices
    (the chords most likely to leave a non-convex set), then all other
    vertex pairs, then random sample pairs. Each midpoint is handed to
    :func:`achieve_spectrum`. The audit passes iff the largest achieved
    distance is at most ``tol`` (default ``1e-4 * ||X||_2``).
    """
    X = np.asarray(X, dtype=float)
    d = X.shape[0] // 2
    j = standard_complex_structure(d)
    if n_pairs < 1:
        raise ValueError("n_pairs must be positive")
    tol = 1e-4 * float(np.linalg.norm(X, 2)) if tol is None else tol
    stream = _stream(rng)
    if stream is not None:
        gen = stream.substream(0).generator()
        pilot_rng = stream.substream(1)
    else:
        gen = as_generator(rng)
        pilot_rng = gen
    fmap = (lambda v: v) if spectrum_map is None else spectrum_map
    S = fmap(sample_spectra(X, j, n_pilot, pilot_rng))
    dists = []
    for a, b in _audit_pairs(S, n_pairs, gen):
        mid = 0.5 * (a + b)
        r = achieve_spectrum(X, mid, gen, restarts=restarts, spectrum_map=spectrum_map,
                             stop_tol=0.1 * tol, j=j)
        dists.append(r.distance)
    worst = float(max(dists))
    return AuditReport(len(dists), worst, tol, worst <= tol, dists)


@dataclass
class EmpiricalMeasure:
    """Normalized histogram on a rectangular grid.

    ``edges`` holds one edge array per axis and ``weights`` the bin masses
    (shape ``[len(e) - 1 for e in edges]``). ``samples`` keeps the raw
    draws when available.
    """

    edges: list
    weights: np.ndarray
    samples: np.ndarray = None

    @property
    def total(self):
        return float(self.weights.sum())

    def centers(self):
        return [0.5 * (e[1:] + e[:-1]) for e in self.edges]

    def bin_widths(self):
        return np.array([float(np.max(np.diff(e))) for e in self.edges])

    def support(self):
        """Centres of bins with positive weight, as rows."""
        idx = np.argwhere(self.weights > 0)
        cs = self.centers()
        return np.array([[cs[a][i] for a, i in enumerate(row)] for row in idx])

    def write_csv(self, path):
        cs = self.centers()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"c{i + 1}" for i in range(len(cs))] + ["weight"])
            for row in np.argwhere(self.weights > 0):
                coords = [cs[a][i] for a, i in enumerate(row)]
                w.writerow([_io.fmt(v) for v in coords] + [_io.fmt(self.weights[tuple(row)])])


def _histogram(values, bins):
    values = np.atleast_2d(values)
    N, k = values.shape
    if bins is None:
        bins = int(math.ceil(N ** (1.0 / 3.0)))
    bins = [bins] * k if np.isscalar(bins) else list(bins)
    edges = []
    for a in range(k):
        lo, hi = float(values[:, a].min()), float(values[:, a].max())
        if hi - lo <= 1e-12 * max(1.0, abs(lo)):
            pad = 1e-9 * max(1.0, abs(lo))
            edges.append(np.array([lo - pad, hi + pad]))
        else:
            edges.append(np.linspace(lo, hi, bins[a] + 1))
    H, _ = np.histogramdd(values, bins=edges)
    return EmpiricalMeasure(edges, H / N, values)


def pushforward_histogram(X, j, N, bins=None, rng=None, workers=None):
    """Histogram of the spectra of ``mu(k X k^T)`` for Haar ``k`` on ``O(2d)``.

    Those spectra are half the real spectra; the grid spans all ``d``
    coordinates with ``ceil(N ** (1/3))`` bins per axis by default.
    """
    S = 0.5 * sample_spectra(X, j, N, rng, workers=workers)
    return _histogram(S, bins)


def complex_orbit_pushforward(spectrum, N, bins=None, rng=None, workers=None):
    """First diagonal entry of ``u diag(a, b) u*`` for Haar ``u`` in ``U(2)``.

    ``u`` is realized by :func:`haar_unitary_commutant` in dimension 4.
    """
    a, b = (float(v) for v in spectrum)
    if a < b:
        raise ValueError("need a >= b")
    j = standard_complex_structure(2)
    D = np.diag([a, a, b, b])

    def work(gen, count):
        if a == b:
            # the orbit of a scalar matrix is a point
            return np.full((count, 1), a)
        Q = haar_unitary_commutant(gen, j, size=count)
        return np.einsum("ni,i,ni->n", Q[:, 0, :], np.diag(D), Q[:, 0, :])[:, None]

    vals = _chunked(rng, int(N), work, workers)
    return _histogram(vals, bins)


def ks_uniform(samples, lo, hi):
    """Kolmogorov-Smirnov distance between the sample law and U[lo, hi]."""
    x = np.ravel(samples)
    if hi <= lo:
        return float(np.mean(np.abs(x - lo) > 1e-12 * max(1.0, abs(lo))))
    return float(stats.kstest(x, "uniform", args=(lo, hi - lo)).statistic)
