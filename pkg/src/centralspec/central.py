"""Central configurations: certification, solving and generators.

A configuration ``x`` is central with constant ``lam`` when
``grad U(x) = -lam * x m``. Positions are ``(n, dim)`` arrays.
"""

import itertools
import json
from dataclasses import dataclass

import numpy as np

from . import _io
from .nbody import (
    SingularConfigurationError,
    check_masses,
    grad_potential,
    hessian_potential,
    pair_distances,
    potential,
)

__all__ = [
    "CertificationError",
    "NonConvergenceError",
    "CentralConfiguration",
    "lambda_of",
    "central_residual",
    "relative_residual",
    "body_multipliers",
    "solve_central",
    "gen_lagrange_equilateral",
    "euler_quintic",
    "euler_ratio",
    "gen_euler_collinear",
    "cloud_points",
    "cloud_from_points",
    "gen_symmetric_cloud",
    "normalize_unit_lambda",
    "embed",
    "CLOUD_PRESETS",
]

DEFAULT_THRESHOLD = 1e-9


class CertificationError(RuntimeError):
    pass


class NonConvergenceError(RuntimeError):
    pass


def _center(x, m):
    return x - (m @ x) / m.sum()


def _inertia_trace(x, m):
    return float(np.sum(m[:, None] * x * x))


def lambda_of(x, m):
    """``U(x) / tr(x* x m)`` for a centred, nonsingular configuration."""
    m = check_masses(m)
    x = np.asarray(x, dtype=float)
    I = _inertia_trace(x, m)
    if I == 0.0:
        raise ValueError("zero configuration")
    return potential(x, m) / I


def _residual_vector(x, m):
    return grad_potential(x, m) + lambda_of(x, m) * m[:, None] * x


def central_residual(x, m):
    """Frobenius norm of ``grad U(x) + lambda_of(x) * x m``."""
    m = check_masses(m)
    return float(np.linalg.norm(_residual_vector(np.asarray(x, float), m)))


def relative_residual(x, m):
    m = check_masses(m)
    return central_residual(x, m) / float(np.linalg.norm(grad_potential(x, m)))


def body_multipliers(x, m):
    """Per-body constants ``-(grad_i U, x_i) / (m_i |x_i|^2)``.

    Bodies at the origin get ``nan``.
    """
    m = check_masses(m)
    x = np.asarray(x, dtype=float)
    g = grad_potential(x, m)
    r2 = np.sum(x * x, axis=1)
    out = np.full(len(m), np.nan)
    live = r2 > 1e-28 * max(r2.max(), 1.0)
    out[live] = -np.sum(g[live] * x[live], axis=1) / (m[live] * r2[live])
    return out


@dataclass(frozen=True)
class CentralConfiguration:
    """A configuration together with its central constant and residual."""

    positions: np.ndarray
    masses: np.ndarray
    lam: float
    residual: float

    @classmethod
    def from_positions(cls, x, m):
        """Wrap ``x`` (recentred) without asserting that it is central."""
        m = check_masses(m)
        x = _center(np.asarray(x, dtype=float).reshape(len(m), -1), m)
        return cls(x, m, lambda_of(x, m), central_residual(x, m))

    @property
    def n(self):
        return self.positions.shape[0]

    @property
    def dim(self):
        return self.positions.shape[1]

    @property
    def relative_residual(self):
        return self.residual / float(np.linalg.norm(grad_potential(self.positions, self.masses)))

    def certified(self, threshold=DEFAULT_THRESHOLD):
        return self.lam > 0 and self.relative_residual <= threshold

    def certify(self, threshold=DEFAULT_THRESHOLD):
        if not self.certified(threshold):
            raise CertificationError(
                f"relative residual {self.relative_residual:.3e} exceeds {threshold:.1e}")
        return self

    def to_dict(self):
        return {
            "dim": self.dim,
            "n": self.n,
            "masses": self.masses,
            "positions": self.positions,
            "lambda": self.lam,
            "residual": self.residual,
        }

    @classmethod
    def from_dict(cls, d):
        m = np.asarray(d["masses"], dtype=float)
        x = np.asarray(d["positions"], dtype=float).reshape(int(d["n"]), int(d["dim"]))
        return cls(x, m, float(d["lambda"]), float(d["residual"]))

    def to_json(self):
        return _io.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def save(self, path):
        _io.dump(self.to_dict(), path)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read())


def _newton_system(x, m):
    n, dim = x.shape
    U = potential(x, m)
    g = grad_potential(x, m)
    I = _inertia_trace(x, m)
    lam = U / I
    mx = m[:, None] * x
    F = (g + lam * mx).ravel()
    dlam = (g / I - 2.0 * U * mx / I**2).ravel()
    J = hessian_potential(x, m) + lam * np.diag(np.repeat(m, dim)) + np.outer(mx.ravel(), dlam)
    # gauge: fixed centroid, fixed scale, slice transverse to rotations
    rows = []
    for i in range(dim):
        r = np.zeros((n, dim))
        r[:, i] = m
        rows.append(r.ravel())
    rows.append(mx.ravel())
    for a, b in itertools.combinations(range(dim), 2):
        r = np.zeros((n, dim))
        r[:, b] = mx[:, a]
        r[:, a] = -mx[:, b]
        rows.append(r.ravel())
    A = np.vstack([J, np.array(rows)])
    rhs = np.concatenate([-F, np.zeros(len(rows))])
    return A, rhs


def _safe_norm(x, m, floor):
    try:
        if pair_distances(x).min() < floor:
            return np.inf
        return float(np.linalg.norm(_residual_vector(x, m)))
    except SingularConfigurationError:
        return np.inf


def solve_central(initial, m, max_grad_iter=5000, max_newton_iter=60,
                  switch_tol=1e-3, threshold=DEFAULT_THRESHOLD, target=1e-13):
    """Find a central configuration near ``initial``.

    Projected gradient descent of ``U`` on the ellipsoid ``tr(x* x m) = 2``
    with Armijo backtracking, then damped Newton on
    ``F(x) = grad U(x) + lambda_of(x) x m`` with centroid, scale and
    rotation gauge rows appended (solved in the least-squares sense).

    Raises
    ------
    NonConvergenceError
        If the certified relative residual ``threshold`` is not reached.
    """
    m = check_masses(m)
    x = _center(np.asarray(initial, dtype=float).reshape(len(m), -1), m)
    if pair_distances(x).min() == 0.0:
        raise SingularConfigurationError("coincident bodies in initial guess")

    def retract(z):
        z = _center(z, m)
        return z * np.sqrt(2.0 / _inertia_trace(z, m))

    x = retract(x)
    floor = 1e-8 * pair_distances(x).min()
    alpha = 0.1
    for _ in range(max_grad_iter):
        F = _residual_vector(x, m)
        rel = np.linalg.norm(F) / np.linalg.norm(grad_potential(x, m))
        if rel < switch_tol:
            break
        gdir = F / m[:, None]
        slope = float(np.sum(m[:, None] * gdir * gdir))
        U0 = potential(x, m)
        while alpha > 1e-16:
            trial = retract(x - alpha * gdir)
            if pair_distances(trial).min() > floor:
                if potential(trial, m) <= U0 - 1e-4 * alpha * slope:
                    break
            alpha *= 0.5
        else:
            break
        x = trial
        alpha = min(alpha * 2.0, 10.0)

    for _ in range(max_newton_iter):
        r0 = _safe_norm(x, m, floor)
        if r0 / np.linalg.norm(grad_potential(x, m)) <= target:
            break
        A, rhs = _newton_system(x, m)
        step = np.linalg.lstsq(A, rhs, rcond=None)[0].reshape(x.shape)
        t = 1.0
        while t > 1e-6:
            trial = _center(x + t * step, m)
            if _safe_norm(trial, m, floor) < r0:
                break
            t *= 0.5
        else:
            break
        x = trial

    c = CentralConfiguration.from_positions(x, m)
    if not c.certified(threshold):
        raise NonConvergenceError(
            f"relative residual {c.relative_residual:.3e} above {threshold:.1e}")
    return c


def embed(c, dim):
    """Zero-pad a configuration into a higher-dimensional space."""
    x = c.positions if isinstance(c, CentralConfiguration) else np.asarray(c, float)
    if dim < x.shape[1]:
        raise ValueError("target dimension smaller than the configuration's")
    z = np.zeros((x.shape[0], dim))
    z[:, : x.shape[1]] = x
    if isinstance(c, CentralConfiguration):
        return CentralConfiguration.from_positions(z, c.masses)
    return z


def gen_lagrange_equilateral(m, dim=2):
    """Equilateral triangle of side 1, centred at the mass centroid."""
    m = check_masses(m)
    if len(m) != 3:
        raise ValueError("Lagrange configuration needs exactly 3 masses")
    x = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]])
    c = CentralConfiguration.from_positions(x, m)
    return embed(c, dim) if dim != 2 else c


def euler_quintic(m1, m2, m3):
    """Coefficients (highest degree first) of the spacing-ratio quintic.

    Bodies sit on a line in the order ``m1, m2, m3``; the unknown is
    ``z = |x3 - x2| / |x2 - x1|``.
    """
    return np.array([
        m1 + m2,
        3 * m1 + 2 * m2,
        3 * m1 + m2,
        -(m2 + 3 * m3),
        -(2 * m2 + 3 * m3),
        -(m2 + m3),
    ], dtype=float)


def euler_ratio(m1, m2, m3, tol=1e-15, max_iter=200):
    """Unique positive root of :func:`euler_quintic` (bisection + Newton)."""
    c = euler_quintic(m1, m2, m3)
    dc = np.polyder(c)
    p = lambda z: np.polyval(c, z)
    lo, hi = 0.0, 1.0
    while p(hi) <= 0:
        lo, hi = hi, 2.0 * hi
    z = 0.5 * (lo + hi)
    for _ in range(max_iter):
        f = p(z)
        if f == 0:
            return z
        if f < 0:
            lo = z
        else:
            hi = z
        d = np.polyval(dc, z)
        zn = z - f / d if d > 0 else np.nan
        if not (lo < zn < hi):
            zn = 0.5 * (lo + hi)
        if abs(zn - z) <= tol * max(1.0, z):
            return zn
        z = zn
    return z


def gen_euler_collinear(m, ordering=(0, 1, 2), dim=2):
    """Euler's collinear configuration with the masses placed in ``ordering``.

    ``ordering`` lists body indices from left to right on the first axis.
    """
    m = check_masses(m)
    if len(m) != 3:
        raise ValueError("Euler configuration needs exactly 3 masses")
    order = list(ordering)
    if sorted(order) != [0, 1, 2]:
        raise ValueError("ordering must be a permutation of (0, 1, 2)")
    a, b, cc = (m[i] for i in order)
    z = euler_ratio(a, b, cc)
    x = np.zeros((3, dim))
    for pos, body in zip((0.0, 1.0, 1.0 + z), order):
        x[body, 0] = pos
    return CentralConfiguration.from_positions(x, m)


def _signs(dim):
    return np.array(list(itertools.product((1.0, -1.0), repeat=dim)))


def _icosahedron():
    phi = (1 + np.sqrt(5.0)) / 2
    pts = []
    for s1 in (1, -1):
        for s2 in (1, -1):
            v = (0.0, s1 * 1.0, s2 * phi)
            pts += [v, (v[1], v[2], v[0]), (v[2], v[0], v[1])]
    return np.array(pts)


def _cuboctahedron():
    pts = set()
    for i, j in itertools.combinations(range(3), 2):
        for s1, s2 in itertools.product((1.0, -1.0), repeat=2):
            v = [0.0, 0.0, 0.0]
            v[i], v[j] = s1, s2
            pts.add(tuple(v))
    return np.array(sorted(pts))


CLOUD_PRESETS = ("polygon", "cross_polytope", "hypercube", "icosahedron", "cuboctahedron")


def cloud_points(preset, size=None):
    """Vertices (unit circumradius) of a symmetric cloud preset.

    ``size`` is the number of vertices for ``polygon`` and the ambient
    dimension for ``cross_polytope`` and ``hypercube``.
    """
    if preset == "polygon":
        if size is None or size < 2:
            raise ValueError("polygon needs size >= 2")
        t = 2 * np.pi * np.arange(size) / size
        pts = np.column_stack([np.cos(t), np.sin(t)])
    elif preset == "cross_polytope":
        if size is None or size < 1:
            raise ValueError("cross_polytope needs a dimension")
        pts = np.vstack([np.eye(size), -np.eye(size)])
    elif preset == "hypercube":
        if size is None or not 1 <= size <= 4:
            raise ValueError("hypercube supports dimension 1..4")
        pts = _signs(size)
    elif preset == "icosahedron":
        pts = _icosahedron()
    elif preset in ("cuboctahedron", "cube_octahedron"):
        pts = _cuboctahedron()
    else:
        raise ValueError(f"unknown preset {preset!r}")
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def cloud_from_points(points, m=1.0, M=1.0, threshold=DEFAULT_THRESHOLD):
    """Cloud of equal masses ``m`` plus a heavy mass ``M`` at the origin.

    With ``M == 0`` the central body is omitted. The result is certified by
    residual and by agreement of the per-body multipliers.

    Raises
    ------
    CertificationError
        If either check fails.
    """
    pts = np.asarray(points, dtype=float)
    if m <= 0 or M < 0:
        raise ValueError("need m > 0 and M >= 0")
    if M > 0:
        x = np.vstack([np.zeros(pts.shape[1]), pts])
        masses = np.concatenate([[M], np.full(len(pts), m)])
    else:
        x = pts
        masses = np.full(len(pts), float(m))
    c = CentralConfiguration.from_positions(x, masses)
    c.certify(threshold)
    lam_i = body_multipliers(c.positions, masses)
    lam_i = lam_i[~np.isnan(lam_i)]
    spread = float(np.max(np.abs(lam_i - c.lam)) / c.lam)
    if spread > threshold:
        raise CertificationError(f"per-body multipliers disagree ({spread:.3e})")
    return c


def gen_symmetric_cloud(preset, m=1.0, M=1.0, size=None, threshold=DEFAULT_THRESHOLD):
    """Certified central configuration from a symmetric-cloud preset."""
    return cloud_from_points(cloud_points(preset, size), m, M, threshold)


def normalize_unit_lambda(c):
    """Rescale by ``lam ** (1/3)`` so the central constant becomes 1."""
    mu = c.lam ** (1.0 / 3.0)
    return CentralConfiguration.from_positions(mu * c.positions, c.masses)
