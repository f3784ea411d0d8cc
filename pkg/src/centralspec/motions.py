"""Homothetic, rigid and homographic motions over a central configuration."""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import _io
from .central import CentralConfiguration, DEFAULT_THRESHOLD
from .momentmap import check_complex_structure
from .nbody import Trajectory, grad_potential, write_trajectory_csv

__all__ = [
    "KeplerOrbit",
    "MotionTrajectory",
    "solve_kepler_equation",
    "planar_kepler_state",
    "homothetic_motion",
    "rigid_motion",
    "homographic_motion",
    "newton_residual",
    "second_derivative",
    "rotation",
]

TWO_PI = 2.0 * math.pi


def solve_kepler_equation(mean_anomaly, e, tol=1e-15, max_iter=100):
    """Eccentric anomaly ``E`` with ``E - e sin E = M`` (elliptic case).

    Newton iterations kept inside the bracket ``[M - e, M + e]``, falling
    back to bisection whenever a step leaves it.
    """
    if not 0.0 <= e < 1.0:
        raise ValueError("eccentricity must lie in [0, 1)")
    M = float(mean_anomaly)
    if e == 0.0 or M == 0.0:
        return M
    k = math.floor((M + math.pi) / TWO_PI)
    Mr = M - k * TWO_PI
    lo, hi = Mr - e, Mr + e
    E = Mr + e * math.sin(Mr) / max(1.0 - e * math.cos(Mr), 1e-3)
    if not lo <= E <= hi:
        E = Mr
    for _ in range(max_iter):
        f = E - e * math.sin(E) - Mr
        if f == 0.0:
            break
        if f > 0:
            hi = E
        else:
            lo = E
        En = E - f / (1.0 - e * math.cos(E))
        if not lo <= En <= hi:
            En = 0.5 * (lo + hi)
        done = abs(En - E) <= tol * max(1.0, abs(E))
        E = En
        if done:
            break
    return E + k * TWO_PI


@dataclass(frozen=True)
class KeplerOrbit:
    """Bound planar Kepler orbit ``r'' - r th'^2 = -mu/r^2``.

    ``phase`` is the mean anomaly at ``t = 0``; the angle ``theta`` is
    measured from periapsis.
    """

    semi_major: float
    eccentricity: float
    gravitational_parameter: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.semi_major > 0:
            raise ValueError("semi-major axis must be positive")
        if not 0.0 <= self.eccentricity < 1.0:
            raise ValueError("eccentricity must lie in [0, 1)")
        if not self.gravitational_parameter > 0:
            raise ValueError("gravitational parameter must be positive")

    @property
    def mean_motion(self):
        return math.sqrt(self.gravitational_parameter / self.semi_major**3)

    @property
    def period(self):
        return TWO_PI / self.mean_motion


def planar_kepler_state(orbit, t):
    """Polar state ``(r, theta, r_dot, theta_dot)`` at time ``t``."""
    a, e = orbit.semi_major, orbit.eccentricity
    n = orbit.mean_motion
    E = solve_kepler_equation(orbit.phase + n * t, e)
    sE, cE = math.sin(E), math.cos(E)
    r = a * (1.0 - e * cE)
    beta = e / (1.0 + math.sqrt(1.0 - e * e))
    theta = E + 2.0 * math.atan2(beta * sE, 1.0 - beta * cE)
    E_dot = n / (1.0 - e * cE)
    r_dot = a * e * sE * E_dot
    h = math.sqrt(orbit.gravitational_parameter * a * (1.0 - e * e))
    return r, theta, r_dot, h / (r * r)


@dataclass(frozen=True)
class MotionTrajectory(Trajectory):
    """Closed-form motion ``z(t)`` sampled at ``times``."""

    kind: str = "rigid"
    masses: np.ndarray = None
    truncated: bool = False

    def sidecar(self):
        return {"kind": self.kind, "n_samples": len(self.times),
                "truncated": self.truncated, "masses": self.masses}

    def write(self, csv_path, json_path=None):
        write_trajectory_csv(self, csv_path)
        if json_path is not None:
            _io.dump(self.sidecar(), json_path)


def rotation(theta, J):
    """``exp(theta J) = cos(theta) I + sin(theta) J``, valid since ``J^2 = -I``."""
    return math.cos(theta) * np.eye(J.shape[0]) + math.sin(theta) * J


def _times(times):
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or len(t) < 1 or np.any(np.diff(t) <= 0):
        raise ValueError("times must be a strictly increasing vector")
    return t


def _check_config(c, check):
    if check and not c.certified(DEFAULT_THRESHOLD):
        raise ValueError("configuration is not a certified central configuration")


def homothetic_motion(c, r0, v0, times, floor=None, tolerance=1e-13, check=True):
    """``z(t) = r(t) x`` with ``r'' = -lam / r^2`` integrated numerically.

    When ``r`` reaches ``floor`` (default ``1e-6 * r0``) the trajectory is
    cut at the last time before the collision and flagged ``truncated``.
    """
    _check_config(c, check)
    t = _times(times)
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    lam = c.lam
    floor = 1e-6 * r0 if floor is None else floor

    def hit(_, s):
        return s[0] - floor

    hit.terminal = True
    hit.direction = -1
    sol = solve_ivp(lambda _, s: [s[1], -lam / s[0] ** 2], (t[0], t[-1]), [r0, v0],
                    method="DOP853", rtol=tolerance, atol=tolerance * r0,
                    dense_output=True, events=hit)
    truncated = sol.status == 1
    if truncated:
        t = t[t < sol.t_events[0][0]]
    r, rd = sol.sol(t) if len(t) else (np.zeros(0), np.zeros(0))
    x = c.positions
    pos = r[:, None, None] * x[None]
    vel = rd[:, None, None] * x[None]
    return MotionTrajectory(t, pos, vel, kind="homothetic", masses=c.masses,
                            truncated=bool(truncated))


def rigid_motion(c, J, times, omega=None, check=True):
    """``z(t) = exp(t omega J) x`` with velocities ``omega J z``.

    ``omega`` defaults to ``sqrt(lam)``; an explicit value must match it
    unless ``check`` is disabled.
    """
    _check_config(c, check)
    if c.dim % 2:
        raise ValueError("rigid motions need an even-dimensional space (no complex structure exists)")
    J = check_complex_structure(J)
    if J.shape[0] != c.dim:
        raise ValueError("complex structure and configuration differ in dimension")
    w = math.sqrt(c.lam)
    if omega is None:
        omega = w
    elif check and abs(omega * omega - c.lam) > 1e-9 * c.lam:
        raise ValueError(f"omega^2 = {omega * omega:g} does not match lambda = {c.lam:g}")
    t = _times(times)
    x = c.positions
    pos = np.array([x @ rotation(s * omega, J).T for s in t])
    vel = pos @ (omega * J).T
    return MotionTrajectory(t, pos, vel, kind="rigid", masses=c.masses)


def homographic_motion(c, J, orbit, times, floor=None, check=True):
    """``z(t) = r(t) exp(theta(t) J) x`` over a planar Kepler solution."""
    _check_config(c, check)
    if c.dim % 2:
        raise ValueError("homographic motions need an even-dimensional space")
    J = check_complex_structure(J)
    if J.shape[0] != c.dim:
        raise ValueError("complex structure and configuration differ in dimension")
    if check and abs(orbit.gravitational_parameter - c.lam) > 1e-9 * c.lam:
        raise ValueError("orbit gravitational parameter differs from the central constant")
    t = _times(times)
    x = c.positions
    floor = 1e-6 * orbit.semi_major if floor is None else floor
    pos, vel = [], []
    truncated = False
    for s in t:
        r, th, rd, thd = planar_kepler_state(orbit, s)
        if r < floor:
            truncated = True
        R = rotation(th, J)
        z0 = x @ R.T
        pos.append(r * z0)
        vel.append(rd * z0 + r * thd * z0 @ J.T)
    return MotionTrajectory(t, np.array(pos), np.array(vel), kind="homographic",
                            masses=c.masses, truncated=truncated)


def second_derivative(samples, h):
    """Fourth-order central difference along axis 0 (interior points)."""
    z = np.asarray(samples)
    return (-z[4:] + 16 * z[3:-1] - 30 * z[2:-2] + 16 * z[1:-3] - z[:-4]) / (12 * h * h)


def newton_residual(traj, m=None):
    """Largest ``||z'' m - grad U(z)||_F`` over interior sample times.

    ``z''`` comes from :func:`second_derivative`; samples must be
    equispaced.
    """
    m = traj.masses if m is None else np.asarray(m, dtype=float)
    t = traj.times
    if len(t) < 5:
        raise ValueError("need at least 5 samples")
    dt = np.diff(t)
    h = float(dt.mean())
    if np.max(np.abs(dt - h)) > 1e-9 * max(h, abs(t).max()):
        raise ValueError("newton_residual needs equispaced sample times")
    acc = second_derivative(traj.positions, h)
    worst = 0.0
    for i, a in enumerate(acc):
        z = traj.positions[i + 2]
        worst = max(worst, float(np.linalg.norm(a * m[:, None] - grad_potential(z, m))))
    return worst
