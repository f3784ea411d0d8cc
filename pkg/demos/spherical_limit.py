"""Spherical functions converging to Bessel functions.

Prints |phi_{n lam}(exp(X/n)) - I_0(2 lam x)| for increasing n. Each
doubling of n cuts the error by about a factor of four. The second part
compares the U(2) weight measure with the pushforward histogram.
"""
from centralspec.numerics import RngStream
from centralspec.spherical import limit_check, pushforward_vs_branching

rows = limit_check(0.8, 0.6, [2, 4, 8, 16, 32, 64])
prev = None
for r in rows:
    ratio = "" if prev is None else f"  ratio {prev / r.error:.2f}"
    print(f"n={r.n:3d}  phi={r.phi:.12f}  psi={r.psi:.12f}  error={r.error:.3e}{ratio}")
    prev = r.error

for pq in [(1, 0), (3, 1)]:
    rep = pushforward_vs_branching(pq, 200, 100_000, rng=RngStream(5))
    print(f"branching {pq}: KS {rep['ks']:.4f} (threshold {rep['threshold']:.4f})")
