"""
Steering a car that can reverse
===============================

A Reeds-Shepp car drives at unit speed in either direction. It never turns
tighter than radius ``R``. Between any two poses there is a shortest path made
of at most five arcs and straight pieces. This script looks at a few of them
and checks the closed-form solver against the brute-force search.
"""
import math

import numpy as np

from dcaplan.geometry import privileged_coords, pseudonorm, rs_constants
from dcaplan.reeds_shepp import interpolate, rs_distance, steer
from dcaplan.rs_oracle import oracle_distance

R = 1.0

# Driving straight ahead is a single forward segment.
path = steer((0, 0, 0), (5, 0, 0), R)
print("straight ahead:", path.word, path.total_length)

# Turning around on the spot needs cusps. The shortest way to face backwards
# has length pi at unit radius.
path = steer((0, 0, 0), (0, 0, math.pi), R)
print("turn around:  ", path.word, round(path.total_length, 12))
for s in np.linspace(0.0, path.total_length, 5):
    print(f"   s={s:5.3f}  pose={tuple(round(v, 3) for v in interpolate(path, (0, 0, 0), s))}")

# Parallel parking: one lane to the left, same heading.
path = steer((0, 0, 0), (0, 1, 0), R)
print("parallel park:", path.word, round(path.total_length, 6))

# The brute-force search sweeps one free arc of every word template and
# solves the rest geometrically. It shares no formulas with the solver.
rng = np.random.default_rng(0)
worst = 0.0
for _ in range(20):
    a = (*rng.uniform(0, 10, 2), rng.uniform(-math.pi, math.pi))
    b = (*rng.uniform(0, 10, 2), rng.uniform(-math.pi, math.pi))
    worst = max(worst, abs(rs_distance(a, b, R) - oracle_distance(a, b, R)))
print(f"largest disagreement with the brute-force search on 20 pairs: {worst:.1e}")

# Close to a pose the distance behaves like the weighted pseudonorm of the
# frame coordinates: sideways motion costs like a square root.
c = rs_constants(R)
print(f"ball-box constants for R={R}: a_min={c.a_min:.3f}, A_max={c.A_max:.3f}")
for target in [(0.1, 0, 0), (0, 0.01, 0), (0, 0, 0.1), (0.05, 0.01, 0.05)]:
    z = privileged_coords((0, 0, 0), target)
    d = rs_distance((0, 0, 0), target, R)
    print(f"   target {target}: d={d:.4f}  ||z||={pseudonorm(z):.4f}  ratio={d / pseudonorm(z):.3f}")
