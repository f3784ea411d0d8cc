"""Rigid and homographic motions in four dimensions.

The Lagrange triangle is normalized to lambda = 1 and placed in R^4. A
random complex structure J then turns it into a rigid rotation and into
Kepler-driven homographic motions. Each is checked against Newton's
equations by finite differences, and the rigid one also against a
numerical integration.
"""
import math

import numpy as np

from centralspec.central import embed, gen_lagrange_equilateral, normalize_unit_lambda
from centralspec.momentmap import random_complex_structure
from centralspec.motions import KeplerOrbit, homographic_motion, newton_residual, rigid_motion
from centralspec.nbody import integrate
from centralspec.numerics import RngStream

c = embed(normalize_unit_lambda(gen_lagrange_equilateral([1, 1, 1])), 4)
J = random_complex_structure(RngStream(1).generator(), 2)

times = np.linspace(0, 2 * math.pi, 1025)
rigid = rigid_motion(c, J, times)
print(f"rigid: Newton residual {newton_residual(rigid):.2e}")

num = integrate(rigid.state(0), c.masses, times[-1], tolerance=1e-12, times=times)
print(f"rigid vs DOP853 integration: max deviation {np.abs(num.positions - rigid.positions).max():.2e}")

for e in (0.2, 0.4, 0.8):
    o = KeplerOrbit(1.0, e, c.lam)
    steps = 16384 if e > 0.5 else 2048
    h = homographic_motion(c, J, o, np.linspace(0, o.period, steps + 1))
    print(f"homographic e={e}: Newton residual {newton_residual(h):.2e} ({steps} steps)")
