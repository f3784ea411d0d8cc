"""Central configurations: classical families and the solver.

Generates the Lagrange triangle, the three Euler lines for masses
(1, 2, 3), a weighted hexagon with a heavy centre, and a solver run from a
rough starting guess, then prints the multiplier and certified residual
of each.
"""
import numpy as np

from centralspec.central import (
    gen_euler_collinear,
    gen_lagrange_equilateral,
    gen_symmetric_cloud,
    solve_central,
)


def show(name, c):
    print(f"{name:28s} lambda = {c.lam:.12f}   relative residual = {c.relative_residual:.1e}")


show("Lagrange, equal masses", gen_lagrange_equilateral([1, 1, 1]))
show("Lagrange, masses 1,2,3", gen_lagrange_equilateral([1, 2, 3]))
for ordering in [(0, 1, 2), (1, 0, 2), (0, 2, 1)]:
    show(f"Euler, order {ordering}", gen_euler_collinear([1, 2, 3], ordering))
show("hexagon + heavy centre", gen_symmetric_cloud("polygon", 0.01, 1.0, size=6))
show("icosahedron + centre", gen_symmetric_cloud("icosahedron", 1.0, 2.0))

# any rough guess near a triangle converges to an equilateral one
guess = np.array([[0.0, 0.0], [1.2, 0.1], [0.4, 0.7]])
c = solve_central(guess, [1.0, 1.0, 1.0])
show("solver from a rough guess", c)
d = np.linalg.norm(c.positions[:, None] - c.positions[None], axis=-1)[np.triu_indices(3, 1)]
print("side lengths:", d)
