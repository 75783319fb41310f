"""
Cost against sample count
=========================

As the number of samples grows the connection radius shrinks like
``(log n / n)^(1/4)``, yet the returned cost keeps falling toward the optimum.
This is the shape of the classic convergence plot, printed as a table of mean
cost plus or minus one standard error.
"""
from dcaplan.bench import SweepSpec, run_sweep, summarize

spec = SweepSpec(scenario="maze", planner="dfmt", n_values=[250, 500, 1000, 2000], trials=10, base_seed=100)
rows = list(run_sweep(spec))

print(f"{'n':>6} {'success':>8} {'mean cost':>10} {'sem':>7} {'time s':>7}")
for s in summarize(rows):
    mean = f"{s['mean_cost']:.3f}" if s["mean_cost"] is not None else "-"
    print(f"{s['n']:>6} {s['success_rate']:>8.2f} {mean:>10} {s['sem_cost']:>7.3f} {s['mean_wall_time']:>7.2f}")

# Every row is reproducible on its own: the trial seed is base_seed + trial.
r = rows[-1]
print(f"rerun with: dcaplan plan --scenario maze --planner dfmt --n {r.n} --seed {r.seed}")
