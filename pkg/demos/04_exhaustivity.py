"""
Do random samples trace a good path?
====================================

Fix a reference path through the maze. Place milestones along it every half
connection radius and look for a sample near each one. If every milestone
has a sample close by, the chain of optimal connections between those
samples is nearly as short as the reference and never strays far from it.
The chance that this fails should vanish as ``n`` grows.
"""
import math

from dcaplan.bench import parse_reference
from dcaplan.environment import load_scenario
from dcaplan.exhaustivity import empty_ball_tail, small_ball_miss_tail, trace_trial

maze = load_scenario("maze")
reference = parse_reference("plan:dfmt:2000:12345", maze)
print(f"reference path: {len(reference)} poses")

eps = 0.5
for n in (100, 250, 500, 1000):
    reports = [trace_trial(maze, reference, n, seed, eps) for seed in range(20)]
    rate = sum(r.success for r in reports) / len(reports)
    worst = max((r.cost_ratio for r in reports if r.success), default=math.nan)
    print(f"n={n:5d}  r_n={reports[0].r_n:.3f}  milestones={reports[0].milestone_count:3d}  "
          f"success={rate:.2f}  worst cost ratio={worst:.3f}")

# The two sampling lemmas behind the argument, checked by simulation on
# disjoint regions of known volume. With regions of volume fraction
# log(n)/n each one is empty with chance close to 1/n, so the first bound is
# nearly attained and the estimate hovers around it.
n = 1000
est = empty_ball_tail(maze, math.log(n) / n, 10, n, trials=5000, seed=1)
print(f"some of 10 regions empty: {est.probability:.4f} +- {est.standard_error:.4f}, bound {est.bound:.4f}")
est = small_ball_miss_tail(maze, 0.25, 20, n, trials=2000, seed=2)
print(f"a quarter of 20 small regions empty: {est.probability:.4f}, bound {est.bound:.4f}")
