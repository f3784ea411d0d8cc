"""Numerical primitives shared by the rest of the package.

Symmetric eigensolving, matrix exponentials, Haar sampling on the
orthogonal and unitary groups, periodic quadrature and reproducible
random substreams.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "ContractViolation",
    "RngStream",
    "as_generator",
    "is_symmetric",
    "is_skew",
    "is_orthogonal",
    "sym_eigen",
    "matrix_exp",
    "haar_orthogonal",
    "haar_unitary",
    "realify",
    "unitary_frame",
    "haar_unitary_commutant",
    "quad_periodic",
]


class ContractViolation(ValueError):
    """An input violates a documented precondition."""


@dataclass(frozen=True)
class RngStream:
    """Deterministic random stream addressed by ``(seed, stream_id)``.

    Substreams are derived with :class:`numpy.random.SeedSequence` spawn
    keys, so a task tree yields the same draws no matter how many workers
    execute it.
    """

    seed: int
    stream_id: int = 0
    parent: tuple = ()

    @property
    def key(self):
        return self.parent + (self.stream_id,)

    def generator(self):
        """A fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(ss))

    def substream(self, i):
        return RngStream(self.seed, int(i), self.key)


def as_generator(rng):
    """Coerce ``rng`` (RngStream, Generator, int or None) to a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return np.random.default_rng(rng)


def _maxabs(a):
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def is_symmetric(S, rtol=1e-12):
    S = np.asarray(S)
    return S.ndim == 2 and S.shape[0] == S.shape[1] and (
        _maxabs(S - S.T) <= rtol * (1.0 + _maxabs(S)))


def is_skew(S, rtol=1e-12):
    S = np.asarray(S)
    return S.ndim == 2 and S.shape[0] == S.shape[1] and (
        _maxabs(S + S.T) <= rtol * (1.0 + _maxabs(S)))


def is_orthogonal(Q, atol=1e-10):
    Q = np.asarray(Q)
    return Q.ndim == 2 and Q.shape[0] == Q.shape[1] and (
        _maxabs(Q.T @ Q - np.eye(Q.shape[0])) <= atol)


def sym_eigen(S):
    """Eigendecomposition of a real symmetric matrix.

    Returns
    -------
    values : (n,) ndarray
        Eigenvalues in descending order.
    vectors : (n, n) ndarray
        Orthogonal matrix whose columns are the matching eigenvectors.
    """
    S = np.asarray(S, dtype=float)
    if not np.all(np.isfinite(S)):
        raise ContractViolation("non-finite entries")
    if not is_symmetric(S):
        raise ContractViolation("matrix is not symmetric")
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    return w[::-1], V[:, ::-1]


def matrix_exp(A):
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ContractViolation("non-finite entries")
    return scipy.linalg.expm(A)


def haar_orthogonal(rng, n, size=None):
    """Haar-distributed orthogonal matrices.

    Orthonormalizes a standard Gaussian matrix by QR and multiplies each
    column by the sign of the matching diagonal entry of R, which makes
    the law exactly invariant.

    Parameters
    ----------
    rng : RngStream, numpy Generator or seed
    n : int
        Matrix dimension.
    size : int, optional
        Batch size; if given the result has shape ``(size, n, n)``.
    """
    if n < 1:
        raise ContractViolation("n must be positive")
    gen = as_generator(rng)
    shape = (1 if size is None else size, n, n)
    Q, R = np.linalg.qr(gen.standard_normal(shape))
    d = np.sign(np.diagonal(R, axis1=1, axis2=2))
    d[d == 0] = 1.0
    Q = Q * d[:, None, :]
    return Q[0] if size is None else Q


def haar_unitary(rng, d, size=None):
    """Haar unitary ``d x d`` complex matrices (QR with phase correction)."""
    gen = as_generator(rng)
    shape = (1 if size is None else size, d, d)
    Z = (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    diag = np.diagonal(R, axis1=1, axis2=2)
    ph = diag / np.abs(diag)
    Q = Q * ph[:, None, :]
    return Q[0] if size is None else Q


def realify(U):
    """Real ``2d x 2d`` form of complex ``d x d`` matrices.

    Coordinates are ordered ``(Re z_1, Im z_1, Re z_2, ...)`` so that
    multiplication by ``i`` becomes the standard block structure
    ``[[0, -1], [1, 0]]``.
    """
    U = np.asarray(U)
    d = U.shape[-1]
    out = np.zeros(U.shape[:-2] + (2 * d, 2 * d))
    out[..., 0::2, 0::2] = U.real
    out[..., 1::2, 1::2] = U.real
    out[..., 0::2, 1::2] = -U.imag
    out[..., 1::2, 0::2] = U.imag
    return out


def _check_complex_structure(j, tol=1e-10):
    j = np.asarray(j, dtype=float)
    n = j.shape[0]
    if j.ndim != 2 or j.shape[1] != n or n % 2:
        raise ContractViolation("complex structure must be square of even size")
    if _maxabs(j @ j + np.eye(n)) > tol or _maxabs(j + j.T) > tol:
        raise ContractViolation("j must be skew with j @ j = -I")
    return j


def unitary_frame(j):
    """Orthogonal ``P`` with ``j @ P = P @ j0`` for the standard ``j0``.

    Columns are ``v1, j v1, v2, j v2, ...`` built by Gram-Schmidt.
    """
    j = _check_complex_structure(j)
    n = j.shape[0]
    cols = []
    for e in np.eye(n):
        v = e.copy()
        for _ in range(2):
            for c in cols:
                v -= (c @ v) * c
        nv = np.linalg.norm(v)
        if nv < 1e-8:
            continue
        v /= nv
        cols.extend([v, j @ v])
        if len(cols) == n:
            break
    return np.column_stack(cols)


def haar_unitary_commutant(rng, j, size=None):
    """Haar sample of the unitary group ``U(E, j)`` realized in ``O(2d)``.

    The output is orthogonal and commutes with ``j``.
    """
    j = _check_complex_structure(j)
    P = unitary_frame(j)
    U = realify(haar_unitary(rng, j.shape[0] // 2, size=size))
    return P @ U @ P.T


def quad_periodic(f, n_nodes):
    """Trapezoidal rule for a ``2*pi``-periodic function on ``[0, 2*pi)``.

    ``f`` is called once with the array of nodes; scalar-only callables
    are evaluated node by node.
    """
    if n_nodes < 2:
        raise ContractViolation("need at least 2 nodes")
    theta = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    try:
        vals = np.asarray(f(theta), dtype=float)
        if vals.shape != theta.shape:
            vals = np.broadcast_to(vals, theta.shape)
    except (TypeError, ValueError):
        vals = np.array([f(t) for t in theta], dtype=float)
    return float(2.0 * np.pi * np.mean(vals))
