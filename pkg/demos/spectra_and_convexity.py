"""Spectra of the moment map and their convex range.

For X = diag(2, 1, 0.5, 0), the real spectra of X + J X J^T over random
complex structures J fill a segment in the trace line. For
X = diag(3, 2, 2, 1, 0.5, 0) they fill a polygon. The audit hands chord
midpoints to an optimizer: the true map passes, while a distorted copy
(nu -> sqrt(nu), renormalized) fails.
"""
import numpy as np

from centralspec.momentmap import (
    convexity_audit,
    hull_estimate,
    power_fake_map,
    sample_spectra,
    standard_complex_structure,
)
from centralspec.numerics import RngStream

for X in (np.diag([2.0, 1.0, 0.5, 0.0]), np.diag([3.0, 2.0, 2.0, 1.0, 0.5, 0.0])):
    d = X.shape[0] // 2
    S = sample_spectra(X, standard_complex_structure(d), 50_000, RngStream(d))
    H = hull_estimate(S)
    print(f"d={d}: hull rank {H.rank}, {len(H.vertices)} vertices")
    for v in H.vertices:
        print("   ", np.round(v, 4))

X = np.diag([3.0, 2.0, 2.0, 1.0, 0.5, 0.0])
r = convexity_audit(X, 8, RngStream(10), n_pilot=5000)
print(f"true map:  max midpoint distance {r.max_distance:.1e}  passed={r.passed}")
fake = power_fake_map(0.5, np.trace(X))
# the distortion only shows on some chords, so test a few more pairs
r = convexity_audit(X, 12, RngStream(2), spectrum_map=fake, n_pilot=5000, restarts=4)
print(f"fake map:  max midpoint distance {r.max_distance:.1e}  passed={r.passed}")
