"""Empirical checks of path tracing by random samples.

Waypoints ``y_1 .. y_M`` drawn from a sample set trace a reference path ``x``
when the chain of optimal connections between them hops at most ``r`` at a
time and costs at most ``(1 + eps) c(x)``. Every point of that chain must
also lie within ``r`` of some point of ``x``.

Milestones ``x_m`` sit along the reference at spacing ``r/2``. Each waypoint
is the sample nearest to its milestone inside the large ball of radius
``rho = r/4``. A small ball of radius ``beta * rho`` then sorts the picks into
close and far ones. All balls are exact Reeds-Shepp balls.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from dcaplan import _kernels
from dcaplan.environment import Scenario, free_space_measure, sample_free
from dcaplan.geometry import HOMOGENEOUS_DIM, connection_radius, rs_constants
from dcaplan.reeds_shepp import sample_path, steer

# relative slack for the milestone spacing test, so that an accumulated
# float sum landing a hair under r/2 does not skip a sample point
_SPACING_RTOL = 1e-9


@dataclass
class TraceReport:
    n: int
    r_n: float
    waypoints: list[int]
    cond_spacing: bool
    cond_cost: bool
    cond_proximity: bool
    small_ball_miss_fraction: float
    milestone_count: int = 0
    reference_cost: float = 0.0
    trace_cost: float = math.inf
    cost_bound: float = math.inf
    empty_balls: int = 0
    eps: float = 0.0
    milestone_index: list[int] = field(default_factory=list, repr=False)

    @property
    def success(self) -> bool:
        return self.cond_spacing and self.cond_cost and self.cond_proximity

    @property
    def cost_ratio(self) -> float:
        if self.reference_cost <= 0:
            return 1.0 if self.trace_cost == 0 else math.inf
        return self.trace_cost / self.reference_cost


def _as_poses(x) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(x, dtype=float).reshape(-1, 3))
    if len(arr) == 0:
        raise ValueError("reference path needs at least one pose")
    return arr


def path_cost(x_ref: np.ndarray, R: float) -> float:
    """Reference cost as the sum of optimal distances between consecutive poses."""
    x_ref = _as_poses(x_ref)
    if len(x_ref) < 2:
        return 0.0
    return float(_kernels.paired_distances(x_ref[:-1], x_ref[1:], R).sum())


def milestone_indices(x_ref, r: float, R: float = 1.0) -> list[int]:
    if not r > 0:
        raise ValueError(f"milestone spacing radius must be positive, got {r}")
    x_ref = _as_poses(x_ref)
    if len(x_ref) == 1:
        return [0]
    steps = _kernels.paired_distances(x_ref[:-1], x_ref[1:], R)
    half = 0.5 * r * (1.0 - _SPACING_RTOL)
    out = [0]
    acc = 0.0
    for k, s in enumerate(steps, start=1):
        acc += s
        if acc >= half:
            out.append(k)
            acc = 0.0
    if out[-1] != len(x_ref) - 1:
        out.append(len(x_ref) - 1)
    return out


def milestones(x_ref, r: float, R: float = 1.0) -> np.ndarray:
    """Greedy milestones every ``r/2`` of accumulated distance, plus the end pose."""
    x_ref = _as_poses(x_ref)
    return x_ref[milestone_indices(x_ref, r, R)]


def waypoint_cost_bound(M: int, rho: float, alpha: float, beta: float, c_x: float) -> float:
    """Cost ceiling ``c_x + 2 M rho (beta + alpha - alpha beta)`` for a ball trace."""
    if not (0.0 <= alpha <= 1.0 and 0.0 <= beta <= 1.0):
        raise ValueError(f"alpha and beta must lie in [0, 1], got alpha={alpha}, beta={beta}")
    return c_x + 2.0 * M * rho * (beta + alpha - alpha * beta)


def _within_of_reference(p, x_ref, tree, ms, r, R) -> bool:
    # the neighbouring milestones settle almost every query
    for q in ms:
        if _kernels.distance(q[0], q[1], q[2], p[0], p[1], p[2], R) <= r:
            return True
    cand = tree.query_ball_point(p[:2], r * (1.0 + 1e-9))
    if not cand:
        return False
    d = _kernels.distances_to(x_ref[np.asarray(cand)], np.asarray(p, dtype=float), R)
    return bool((d <= r).any())


def find_trace(
    x_ref,
    V,
    r_n: float,
    beta: float,
    alpha: float,
    R: float = 1.0,
    eps: float | None = None,
    n: int | None = None,
) -> TraceReport:
    """Build ball-tiling waypoints from ``V`` and evaluate the three tracing clauses.

    ``V[0]`` must be the start of the reference path; it is always the first
    waypoint. ``eps`` defaults to ``alpha + beta``.
    """
    x_ref = _as_poses(x_ref)
    V = np.ascontiguousarray(np.asarray(V, dtype=float).reshape(-1, 3))
    eps = alpha + beta if eps is None else eps
    n = len(V) - 1 if n is None else n
    rho = 0.25 * r_n
    small = beta * rho
    c_x = path_cost(x_ref, R)
    ms_idx = milestone_indices(x_ref, r_n, R)
    ms = x_ref[ms_idx]
    M = len(ms)

    tree = cKDTree(V[:, :2])
    waypoints = [0]
    gaps = [float(_kernels.distance(*ms[0], *V[0], R))]
    empty = 0
    for m in range(1, M):
        cand = np.array(sorted(tree.query_ball_point(ms[m, :2], rho * (1.0 + 1e-9))), dtype=np.int64)
        if len(cand):
            d = _kernels.distances_from(ms[m], V[cand], R)
            k = int(np.argmin(d))
            if d[k] <= rho:
                waypoints.append(int(cand[k]))
                gaps.append(float(d[k]))
                continue
        empty += 1
    report = TraceReport(
        n=n,
        r_n=r_n,
        waypoints=waypoints,
        cond_spacing=False,
        cond_cost=False,
        cond_proximity=False,
        small_ball_miss_fraction=(int(np.sum(np.asarray(gaps) > small)) + empty) / M,
        milestone_count=M,
        reference_cost=c_x,
        empty_balls=empty,
        eps=eps,
        milestone_index=ms_idx,
    )
    if empty:
        return report

    ys = V[waypoints]
    hops = _kernels.paired_distances(ys[:-1], ys[1:], R) if M > 1 else np.zeros(0)
    report.trace_cost = float(hops.sum())
    report.cost_bound = waypoint_cost_bound(M, rho, report.small_ball_miss_fraction, beta, c_x)
    report.cond_spacing = bool((hops <= r_n).all())
    report.cond_cost = report.trace_cost <= (1.0 + eps) * c_x
    report.cond_proximity = trace_stays_close(x_ref, ys, r_n, R, step=r_n / 20.0, ms=ms)
    return report


def trace_stays_close(x_ref, ys, r: float, R: float, step: float, ms=None) -> bool:
    """True if every pose of the waypoint chain, sampled at ``step``, is within ``r`` of ``x_ref``."""
    x_ref = _as_poses(x_ref)
    tree = cKDTree(x_ref[:, :2])
    for m in range(len(ys) - 1):
        path = steer(ys[m], ys[m + 1], R)
        near_ms = () if ms is None else (ms[m], ms[m + 1])
        for p in sample_path(path, ys[m], step):
            if not _within_of_reference(p, x_ref, tree, near_ms, r, R):
                return False
    return True


def dense_path(graph_vertices: np.ndarray, chain, edges, step: float) -> np.ndarray:
    """Poses along a planned path at spacing ``step`` (shared joints kept once)."""
    if not chain:
        return np.zeros((0, 3))
    parts = [np.asarray(graph_vertices[chain[0]], dtype=float).reshape(1, 3)]
    for k, e in enumerate(edges):
        pts = sample_path(e, graph_vertices[chain[k]], step)
        parts.append(pts[1:])
    return np.vstack(parts)


def trace_radius(scenario: Scenario, n: int, eta: float = 0.0) -> float:
    return connection_radius(
        max(n, 2), eta, free_space_measure(scenario), HOMOGENEOUS_DIM, rs_constants(scenario.R).A_max
    )


def trace_trial(scenario: Scenario, x_ref, n: int, seed, eps: float, eta: float = 0.0) -> TraceReport:
    """One exhaustivity trial: fresh samples, the theorem's radius, alpha = beta = eps/2."""
    V = np.vstack([scenario.x_init.as_array(), sample_free(scenario, n, seed)])
    r_n = trace_radius(scenario, n, eta)
    half = 0.5 * eps
    return find_trace(x_ref, V, r_n, beta=min(half, 1.0), alpha=min(half, 1.0), R=scenario.R, eps=eps, n=n)


# -- sampling tails ------------------------------------------------------------


@dataclass(frozen=True)
class TailEstimate:
    probability: float
    standard_error: float
    bound: float
    trials: int

    @property
    def within_bound(self) -> bool:
        return self.probability <= self.bound + 3.0 * self.standard_error


def _heading_slab_counts(scenario, n, fraction, M, trials, seed) -> np.ndarray:
    """Samples per heading slab; slab ``m`` holds headings in the ``m``-th ``fraction`` of the circle.

    Headings are uniform and independent of position, so each slab is a
    region of measure ``fraction * mu_free`` and distinct slabs are disjoint.
    """
    if not 0.0 <= fraction <= 1.0 or M * fraction > 1.0 + 1e-12:
        raise ValueError(f"{M} disjoint regions of volume fraction {fraction} do not fit")
    counts = np.zeros((trials, M), dtype=np.int64)
    if fraction == 0.0:
        return counts
    for t in range(trials):
        th = sample_free(scenario, n, [seed, t])[:, 2]
        u = (th + math.pi) / (2.0 * math.pi)  # in (0, 1]
        slab = np.ceil(u / fraction).astype(np.int64) - 1
        slab = slab[(slab >= 0) & (slab < M)]
        counts[t] = np.bincount(slab, minlength=M)[:M]
    return counts


def _estimate(events: np.ndarray, bound: float) -> TailEstimate:
    p = float(events.mean())
    se = math.sqrt(p * (1.0 - p) / len(events))
    return TailEstimate(p, se, bound, len(events))


def empty_ball_tail(scenario: Scenario, region_volume_fraction: float, M: int, n: int, trials: int, seed=0) -> TailEstimate:
    """Chance that some of ``M`` disjoint equal regions gets no sample.

    The bound is ``M n^-kappa`` with ``kappa = fraction * n / log n``.
    """
    counts = _heading_slab_counts(scenario, n, region_volume_fraction, M, trials, seed)
    events = (counts == 0).any(axis=1)
    kappa = region_volume_fraction * n / math.log(n) if n > 1 else math.inf
    bound = min(1.0, M * n ** (-kappa)) if n > 1 else 1.0
    return _estimate(events, bound)


def small_ball_volume_fraction(alpha: float, n: int) -> float:
    """Smallest region volume fraction ``(2 + log(1/alpha)) e^2 / n`` allowed for the miss-count tail."""
    return (2.0 + math.log(1.0 / alpha)) * math.e**2 / n


def small_ball_miss_tail(
    scenario: Scenario, alpha: float, M: int, n: int, trials: int, seed=0, region_volume_fraction=None
) -> TailEstimate:
    """Chance that at least ``alpha M`` of ``M`` disjoint small regions get no sample.

    The bound is ``e^(-alpha M) / (1 - e^(-n))``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    f = small_ball_volume_fraction(alpha, n) if region_volume_fraction is None else region_volume_fraction
    counts = _heading_slab_counts(scenario, n, f, M, trials, seed)
    misses = (counts == 0).sum(axis=1)
    events = misses >= alpha * M
    bound = math.exp(-alpha * M) / (1.0 - math.exp(-n))
    return _estimate(events, bound)
