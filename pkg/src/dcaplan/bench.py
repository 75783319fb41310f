"""Command-line front end: single plans, convergence sweeps and tracing runs.

    dcaplan plan  --scenario maze --planner dfmt --n 1000
    dcaplan sweep --scenario maze --planner dfmt --n 250,500,1000 --trials 50
    dcaplan trace --scenario maze --reference plan:dfmt:4000:7 --n 500,1000 --trials 100

Exit codes: 0 success, 1 usage or input error, 2 planner failure.
Sweep and trace rows are CSV (header row, comma separated, LF line endings);
a per-n summary goes to standard error and, with ``--out``, next to the rows
file as ``<name>.summary.csv``.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from dcaplan.environment import ScenarioError, load_scenario
from dcaplan.exhaustivity import dense_path, trace_trial
from dcaplan.planners import MODES, PLANNERS, plan

EXIT_OK, EXIT_INPUT, EXIT_FAILURE = 0, 1, 2


@dataclass
class SweepSpec:
    scenario: str
    planner: str
    n_values: list[int]
    trials: int = 1
    eta: float = 0.0
    mode: str = "exact_ball"
    cache: str = "on"
    base_seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if not self.n_values or any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ValueError(f"n values must be strictly increasing, got {self.n_values}")
        if self.planner not in PLANNERS:
            raise ValueError(f"unknown planner {self.planner!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.cache not in ("on", "off"):
            raise ValueError(f"cache must be on or off, got {self.cache!r}")


@dataclass
class SweepRow:
    planner: str
    n: int
    trial: int
    seed: int
    status: str
    cost: float | None
    wall_time: float
    collision_checks: int
    steering_solves: int


@dataclass
class TraceRow:
    n: int
    trial: int
    seed: int
    success: bool
    cond_spacing: bool
    cond_cost: bool
    cond_proximity: bool
    small_ball_miss_fraction: float
    cost_ratio: float
    trace_cost: float
    reference_cost: float
    cost_bound: float
    milestone_count: int
    empty_balls: int
    r_n: float


# -- CSV ---------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(rows, fh, cls) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([f.name for f in fields(cls)])
    for row in rows:
        w.writerow([_fmt(v) for v in astuple(row)])


def _parse(value: str, kind):
    if kind is bool:
        return value == "true"
    if kind is int:
        return int(value)
    if kind is float:
        return float(value)
    if kind == "float | None":
        return None if value == "" else float(value)
    return value


_TYPES = {
    SweepRow: {"n": int, "trial": int, "seed": int, "cost": "float | None", "wall_time": float,
               "collision_checks": int, "steering_solves": int},
    TraceRow: {"n": int, "trial": int, "seed": int, "success": bool, "cond_spacing": bool, "cond_cost": bool,
               "cond_proximity": bool, "small_ball_miss_fraction": float, "cost_ratio": float,
               "trace_cost": float, "reference_cost": float, "cost_bound": float, "milestone_count": int,
               "empty_balls": int, "r_n": float},
}


def read_rows(fh, cls) -> list:
    kinds = _TYPES[cls]
    return [cls(**{k: _parse(v, kinds.get(k, str)) for k, v in rec.items()}) for rec in csv.DictReader(fh)]


# -- runs --------------------------------------------------------------------


def run_trial(scenario, planner, n, seed, eta=0.0, mode="exact_ball", cache="on", trial=0) -> SweepRow:
    result, _ = plan(scenario, planner, n, eta=eta, mode=mode, seed=seed, cache=cache)
    return SweepRow(
        planner=planner,
        n=n,
        trial=trial,
        seed=seed,
        status=result.status,
        cost=result.cost,
        wall_time=result.stats.wall_time,
        collision_checks=result.stats.collision_checks,
        steering_solves=result.stats.steering_solves,
    )


def run_sweep(spec: SweepSpec, scenario=None):
    """Yield one row per (n, trial); trial ``k`` uses seed ``base_seed + k``."""
    scenario = load_scenario(spec.scenario) if scenario is None else scenario
    for n in spec.n_values:
        for k in range(spec.trials):
            yield run_trial(scenario, spec.planner, n, spec.base_seed + k, spec.eta, spec.mode, spec.cache, k)


def summarize(rows: list[SweepRow]) -> list[dict]:
    out = []
    for n in sorted({r.n for r in rows}):
        group = [r for r in rows if r.n == n]
        costs = np.array([r.cost for r in group if r.status == "success"], dtype=float)
        out.append(
            {
                "n": n,
                "trials": len(group),
                "successes": len(costs),
                "success_rate": len(costs) / len(group),
                "mean_cost": float(costs.mean()) if len(costs) else None,
                "sem_cost": float(costs.std(ddof=1) / math.sqrt(len(costs))) if len(costs) > 1 else 0.0,
                "mean_wall_time": float(np.mean([r.wall_time for r in group])),
            }
        )
    return out


def summarize_traces(rows: list[TraceRow]) -> list[dict]:
    out = []
    for n in sorted({r.n for r in rows}):
        group = [r for r in rows if r.n == n]
        hits = sum(r.success for r in group)
        out.append({"n": n, "trials": len(group), "successes": hits, "success_rate": hits / len(group)})
    return out


def parse_reference(spec: str, scenario):
    """Reference path from ``plan:<planner>:<n>:<seed>`` or a pose CSV file."""
    if spec.startswith("plan:"):
        parts = spec.split(":")
        if len(parts) != 4 or parts[1] not in PLANNERS:
            raise ValueError(f"reference must look like plan:<dprm|dfmt>:<n>:<seed>, got {spec!r}")
        try:
            n, seed = int(parts[2]), int(parts[3])
        except ValueError:
            raise ValueError(f"reference n and seed must be integers, got {spec!r}") from None
        result, graph = plan(scenario, parts[1], n, seed=seed)
        if not result.success:
            raise ValueError(f"reference planner run {spec!r} found no path")
        return dense_path(graph.vertices, result.vertices, result.edges, scenario.collision_step)
    path = Path(spec)
    if not path.exists():
        raise ValueError(f"reference file {spec!r} does not exist")
    try:
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as exc:
        raise ValueError(f"reference file {spec!r} is not a pose CSV: {exc}") from None
    if arr.ndim != 2 or arr.shape[1] != 3 or len(arr) == 0:
        raise ValueError(f"reference file {spec!r} must have rows x,y,theta")
    return arr


def run_exhaustivity(scenario, reference, n_values, trials, eps, base_seed=0, eta=0.0):
    for n in n_values:
        for k in range(trials):
            seed = base_seed + k
            rep = trace_trial(scenario, reference, n, seed, eps, eta)
            yield TraceRow(
                n=n, trial=k, seed=seed, success=rep.success, cond_spacing=rep.cond_spacing,
                cond_cost=rep.cond_cost, cond_proximity=rep.cond_proximity,
                small_ball_miss_fraction=rep.small_ball_miss_fraction, cost_ratio=rep.cost_ratio,
                trace_cost=rep.trace_cost, reference_cost=rep.reference_cost, cost_bound=rep.cost_bound,
                milestone_count=rep.milestone_count, empty_balls=rep.empty_balls, r_n=rep.r_n,
            )


# -- CLI ---------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _n_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"sample counts must be positive, got {text!r}")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dcaplan", description="Sampling-based planning for the Reeds-Shepp car.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, planner=True):
        sp.add_argument("--scenario", required=True, help="scenario JSON file or shipped scenario name")
        if planner:
            sp.add_argument("--planner", choices=sorted(PLANNERS), default="dfmt")
        sp.add_argument("--eta", type=float, default=0.0)
        sp.add_argument("--mode", choices=MODES, default="exact_ball")
        sp.add_argument("--cache", choices=("on", "off"), default="on")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None)

    sp = sub.add_parser("plan", help="run one planner and print the result as JSON")
    common(sp)
    sp.add_argument("--n", type=int, required=True)

    sp = sub.add_parser("sweep", help="repeat a planner over sample counts and seeds, CSV out")
    common(sp)
    sp.add_argument("--n", type=_n_list, required=True)
    sp.add_argument("--trials", type=int, default=1)

    sp = sub.add_parser("trace", help="tracing success of random samples against a reference path")
    common(sp, planner=False)
    sp.add_argument("--n", type=_n_list, required=True)
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--eps", type=float, default=0.5)
    sp.add_argument("--reference", required=True, help="pose CSV file or plan:<planner>:<n>:<seed>")
    return p


def _open_out(path):
    return open(path, "w", newline="", encoding="utf-8") if path else sys.stdout


def _write_summary(summary, out_path):
    if not summary:
        return
    keys = list(summary[0])
    targets = [sys.stderr]
    fh = None
    if out_path:
        p = Path(out_path)
        fh = open(p.with_name(p.stem + ".summary.csv"), "w", newline="", encoding="utf-8")
        targets.append(fh)
    for t in targets:
        w = csv.DictWriter(t, keys, lineterminator="\n")
        w.writeheader()
        for rec in summary:
            w.writerow({k: _fmt(v) for k, v in rec.items()})
    if fh:
        fh.close()


def _cmd_plan(args, scenario) -> int:
    seed = scenario.seed if args.seed is None else args.seed
    result, graph = plan(scenario, args.planner, args.n, eta=args.eta, mode=args.mode, seed=seed, cache=args.cache)
    doc = result.to_dict(graph)
    doc.update({"n": args.n, "seed": seed, "scenario": scenario.name, "mode": args.mode, "eta": args.eta})
    print(json.dumps(doc, indent=2))
    if args.out and result.success:
        poly = dense_path(graph.vertices, result.vertices, result.edges, scenario.collision_step)
        np.savetxt(args.out, poly, delimiter=",", header="x,y,theta", comments="", fmt="%.17g")
    return EXIT_OK if result.success else EXIT_FAILURE


def _cmd_sweep(args, scenario) -> int:
    spec = SweepSpec(
        scenario=args.scenario, planner=args.planner, n_values=args.n, trials=args.trials, eta=args.eta,
        mode=args.mode, cache=args.cache, base_seed=scenario.seed if args.seed is None else args.seed,
    )
    rows = []
    fh = _open_out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f.name for f in fields(SweepRow)])
        for row in run_sweep(spec, scenario):
            rows.append(row)
            w.writerow([_fmt(v) for v in astuple(row)])
            fh.flush()
    finally:
        if fh is not sys.stdout:
            fh.close()
    _write_summary(summarize(rows), args.out)
    return EXIT_OK


def _cmd_trace(args, scenario) -> int:
    if args.trials < 1:
        raise ValueError(f"trials must be at least 1, got {args.trials}")
    if not args.eps > 0:
        raise ValueError(f"eps must be positive, got {args.eps}")
    reference = parse_reference(args.reference, scenario)
    base = scenario.seed if args.seed is None else args.seed
    rows = list(run_exhaustivity(scenario, reference, args.n, args.trials, args.eps, base, args.eta))
    fh = _open_out(args.out)
    try:
        write_rows(rows, fh, TraceRow)
    finally:
        if fh is not sys.stdout:
            fh.close()
    _write_summary(summarize_traces(rows), args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        if args.seed is not None and args.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {args.seed}")
        if getattr(args, "trials", 1) < 1:
            raise ValueError(f"trials must be at least 1, got {args.trials}")
        handler = {"plan": _cmd_plan, "sweep": _cmd_sweep, "trace": _cmd_trace}[args.command]
        if args.command == "plan" and args.n < 1:
            raise ValueError(f"--n must be at least 1, got {args.n}")
        return handler(args, scenario)
    except ScenarioError as exc:
        print(f"dcaplan: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, OSError) as exc:
        print(f"dcaplan: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
