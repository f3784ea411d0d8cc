"""Newtonian n-body problem in a Euclidean space of any dimension.

Positions and velocities are ``(n, dim)`` arrays, one row per body;
masses are a length-``n`` vector and ``G = 1``.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from ._io import fmt

__all__ = [
    "SingularConfigurationError",
    "IntegrationError",
    "PhaseState",
    "ConservedQuantities",
    "Trajectory",
    "check_masses",
    "pair_distances",
    "potential",
    "grad_potential",
    "hessian_potential",
    "reduce_center_of_mass",
    "conserved",
    "integrate",
    "write_trajectory_csv",
]


class SingularConfigurationError(ValueError):
    """Two bodies coincide (or come closer than the allowed floor)."""


class IntegrationError(RuntimeError):
    pass


def check_masses(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 1 or len(m) < 2:
        raise ValueError("need a vector of at least two masses")
    if not np.all(m > 0):
        raise ValueError("masses must be positive")
    return m


def _as_positions(x, m=None):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if m is not None and len(x) != len(m):
        raise ValueError("positions and masses disagree on n")
    return x


def pair_distances(x):
    x = _as_positions(x)
    i, j = np.triu_indices(len(x), 1)
    return np.linalg.norm(x[i] - x[j], axis=1)


def _differences(x):
    # diff[k, j] = x_j - x_k
    diff = x[None, :, :] - x[:, None, :]
    r = np.linalg.norm(diff, axis=2)
    off = ~np.eye(len(x), dtype=bool)
    if np.any(r[off] == 0.0):
        raise SingularConfigurationError("coincident bodies")
    np.fill_diagonal(r, np.inf)
    return diff, r


def potential(x, m):
    """Force function ``U(x) = sum_{j<k} m_j m_k / |x_j - x_k|``."""
    m = check_masses(m)
    x = _as_positions(x, m)
    _, r = _differences(x)
    return 0.5 * float(np.sum(np.outer(m, m) / r))


def grad_potential(x, m):
    """``(n, dim)`` array whose row ``k`` is the gradient of U in ``x_k``."""
    m = check_masses(m)
    x = _as_positions(x, m)
    diff, r = _differences(x)
    w = np.outer(m, m) / r**3
    return np.einsum("kj,kjd->kd", w, diff)


def hessian_potential(x, m):
    """Hessian of U as an ``(n*dim, n*dim)`` matrix (body-major)."""
    m = check_masses(m)
    x = _as_positions(x, m)
    n, dim = x.shape
    diff, r = _differences(x)
    H = np.zeros((n, dim, n, dim))
    eye = np.eye(dim)
    for k in range(n):
        for j in range(k + 1, n):
            d = diff[k, j]
            rr = r[k, j]
            A = m[j] * m[k] * (3.0 * np.outer(d, d) / rr**5 - eye / rr**3)
            H[k, :, k, :] += A
            H[j, :, j, :] += A
            H[k, :, j, :] -= A
            H[j, :, k, :] -= A
    return H.reshape(n * dim, n * dim)


@dataclass(frozen=True)
class PhaseState:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = _as_positions(self.x)
        y = _as_positions(self.y)
        if x.shape != y.shape:
            raise ValueError("positions and velocities differ in shape")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def dim(self):
        return self.x.shape[1]

    def flat(self):
        return np.concatenate([self.x.ravel(), self.y.ravel()])

    @classmethod
    def from_flat(cls, v, n, dim):
        v = np.asarray(v, dtype=float)
        return cls(v[: n * dim].reshape(n, dim), v[n * dim:].reshape(n, dim))


@dataclass(frozen=True)
class ConservedQuantities:
    energy: float
    linear_momentum: np.ndarray
    angular_momentum: np.ndarray


def reduce_center_of_mass(state, m):
    """Shift to the frame with zero mass centroid and zero total momentum."""
    m = check_masses(m)
    M = m.sum()
    c = m @ state.x / M
    v = m @ state.y / M
    return PhaseState(state.x - c, state.y - v)


def conserved(state, m):
    """Energy ``K(y) - U(x)``, momentum and angular momentum ``y m x* - x m y*``."""
    m = check_masses(m)
    x, y = state.x, state.y
    kinetic = 0.5 * float(np.sum(m[:, None] * y * y))
    H = kinetic - potential(x, m)
    p = m @ y
    L = y.T @ (m[:, None] * x) - x.T @ (m[:, None] * y)
    return ConservedQuantities(H, p, L)


@dataclass(frozen=True)
class Trajectory:
    """Samples ``(t_i, x_i, y_i)`` with arrays of shape ``(T, n, dim)``."""

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray

    def state(self, i):
        return PhaseState(self.positions[i], self.velocities[i])

    def __len__(self):
        return len(self.times)


def _rhs(m, n, dim):
    def f(t, v):
        x = v[: n * dim].reshape(n, dim)
        acc = grad_potential(x, m) / m[:, None]
        return np.concatenate([v[n * dim:], acc.ravel()])
    return f


def integrate(state, m, t_final, tolerance=1e-10, times=None, floor=None):
    """Integrate Newton's equations with an adaptive 8(5,3) Runge-Kutta pair.

    Parameters
    ----------
    state : PhaseState
    m : array_like
    t_final : float
    tolerance : float
        Relative and absolute local error tolerance per step.
    times : array_like, optional
        Output sample times in ``[0, t_final]``; defaults to 201 equispaced
        points. Evaluated from the dense-output interpolant.
    floor : float, optional
        Abort when a pair distance drops below this; defaults to 1e-6 times
        the initial minimum pair distance.

    Raises
    ------
    SingularConfigurationError
        On a close approach below ``floor``.
    IntegrationError
        If the step size underflows.
    """
    m = check_masses(m)
    n, dim = state.x.shape
    dmin = float(pair_distances(state.x).min())
    if dmin == 0.0:
        raise SingularConfigurationError("coincident bodies")
    if floor is None:
        floor = 1e-6 * dmin
    if times is None:
        times = np.linspace(0.0, t_final, 201)
    times = np.asarray(times, dtype=float)

    def close(t, v):
        return pair_distances(v[: n * dim].reshape(n, dim)).min() - floor

    close.terminal = True
    close.direction = -1

    sol = solve_ivp(_rhs(m, n, dim), (0.0, t_final), state.flat(),
                    method="DOP853", rtol=tolerance, atol=tolerance,
                    t_eval=times, events=close)
    if sol.status == 1:
        raise SingularConfigurationError(
            f"close approach below {floor:g} at t={sol.t_events[0][0]:.6g}")
    if sol.status != 0:
        raise IntegrationError(sol.message)
    Y = sol.y.T
    return Trajectory(sol.t, Y[:, : n * dim].reshape(-1, n, dim),
                      Y[:, n * dim:].reshape(-1, n, dim))


def trajectory_header(n, dim):
    cols = ["t"]
    cols += [f"x{k}_{i}" for k in range(n) for i in range(dim)]
    cols += [f"y{k}_{i}" for k in range(n) for i in range(dim)]
    return cols


def write_trajectory_csv(traj, path):
    """CSV with columns ``t``, positions body-major, then velocities."""
    T, n, dim = traj.positions.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(trajectory_header(n, dim))
        for i in range(T):
            row = [traj.times[i], *traj.positions[i].ravel(), *traj.velocities[i].ravel()]
            w.writerow([fmt(v) for v in row])


def read_trajectory_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], np.array(rows[1:], dtype=float)
    n = len({c.split("_")[0] for c in header if c.startswith("x")})
    dim = sum(1 for c in header if c.startswith("x0_"))
    return Trajectory(data[:, 0], data[:, 1:1 + n * dim].reshape(-1, n, dim),
                      data[:, 1 + n * dim:].reshape(-1, n, dim))
