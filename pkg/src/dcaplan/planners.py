"""DPRM* and DFMT*: sampling-based planners for the Reeds-Shepp car.

Both planners share the same building blocks:

* ``near`` returns the neighbours of a pose within the connection radius,
  either in the exact sub-Riemannian ball ``d(x, v) <= r`` or in the weighted
  box ``pseudonorm(z(x, v)) < r / a_min``;
* edge weights are Reeds-Shepp distances, always computed with the lower
  vertex index as the start so that ``d(u, v)`` and ``d(v, u)`` are the same
  float;
* an edge is collision checked along the optimal path from the lower index
  to the higher one, so both planners agree on which edges are free.

DPRM* connects every vertex to all of its neighbours and runs Dijkstra.
DFMT* marches a tree outward in cost-to-come and only collision checks the
locally optimal parent of each new vertex.
"""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _csgraph_dijkstra
from numba import types as nb_types
from numba.typed import Dict as NumbaDict
from scipy.spatial import cKDTree

from dcaplan import _kernels
from dcaplan.environment import Scenario, free_space_measure, in_goal_many, sample_free
from dcaplan.geometry import (
    HOMOGENEOUS_DIM,
    connection_radius,
    privileged_coords_many,
    pseudonorm_many,
    rs_constants,
    wrap_angles,
)
from dcaplan.reeds_shepp import RSPath, steer

MODES = ("exact_ball", "box")
# slack on the planar prefilter so that float rounding never drops a pair
_PREFILTER_SLACK = 1.0 + 1e-9


@dataclass
class NeighborCache:
    """Per-vertex near sets in CSR layout with the matching edge distances.

    Neighbours of vertex ``i`` are ``indices[indptr[i]:indptr[i+1]]`` in
    increasing order; ``dists`` holds the canonical distances to them.
    """

    indptr: np.ndarray
    indices: np.ndarray
    dists: np.ndarray
    r: float
    mode: str
    solves: int = 0

    def neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.indptr[i], self.indptr[i + 1]
        return self.indices[a:b], self.dists[a:b]

    def __len__(self):
        return len(self.indptr) - 1


@dataclass
class PlannerGraph:
    vertices: np.ndarray  # rows (x, y, theta); row 0 is x_init
    kind: str  # "roadmap" or "tree"
    edges: dict[tuple[int, int], float] = field(default_factory=dict)  # keys (lo, hi)
    parent: np.ndarray | None = None  # tree only
    cost: np.ndarray | None = None  # cost-to-come from vertex 0
    neighbor_cache: NeighborCache | None = None

    def adjacency(self) -> list[list[tuple[int, float]]]:
        adj: list[list[tuple[int, float]]] = [[] for _ in range(len(self.vertices))]
        for (a, b), w in self.edges.items():
            adj[a].append((b, w))
            adj[b].append((a, w))
        return adj


@dataclass
class PlanStats:
    collision_checks: int = 0
    steering_solves: int = 0
    wall_time: float = 0.0
    r_n: float = 0.0


@dataclass
class PlanResult:
    status: str  # "success" or "failure"
    vertices: list[int]
    edges: list[RSPath]
    cost: float | None
    stats: PlanStats
    planner: str = ""

    @property
    def success(self) -> bool:
        return self.status == "success"

    def to_dict(self, graph: PlannerGraph | None = None) -> dict:
        out = {
            "status": self.status,
            "planner": self.planner,
            "cost": self.cost,
            "vertices": self.vertices,
            "edges": [
                {
                    "word": e.word,
                    "length": e.total_length,
                    "segments": [[s.kind.value, s.direction.value, s.length] for s in e.segments],
                }
                for e in self.edges
            ],
            "stats": {
                "collision_checks": self.stats.collision_checks,
                "steering_solves": self.stats.steering_solves,
                "wall_time": self.stats.wall_time,
                "r_n": self.stats.r_n,
            },
        }
        if graph is not None:
            out["poses"] = graph.vertices[self.vertices].tolist()
        return out


# -- near --------------------------------------------------------------------


def _pair_dists(verts, i, j, R):
    lo = np.minimum(i, j).astype(np.int64)
    hi = np.maximum(i, j).astype(np.int64)
    return _kernels.vertex_pair_distances(verts, lo, hi, R)


def _box_reach(r: float, a_min: float) -> float:
    # planar extent of the weighted box: |z1| < rho and |z3| < rho^2
    rho = r / a_min
    return rho * math.sqrt(1.0 + rho * rho)


def near(V: np.ndarray, x, r: float, mode: str = "exact_ball", R: float = 1.0) -> np.ndarray:
    """Indices of rows of ``V`` inside the connection neighbourhood of ``x``.

    ``exact_ball`` keeps ``rs_distance(x, v) <= r``; ``box`` keeps
    ``pseudonorm(privileged_coords(x, v)) < r / a_min``.
    """
    if not r > 0:
        raise ValueError(f"near radius must be positive, got {r}")
    V = np.ascontiguousarray(np.atleast_2d(np.asarray(V, dtype=float)).reshape(-1, 3))
    if len(V) == 0:
        return np.zeros(0, dtype=np.int64)
    x = np.asarray(tuple(x), dtype=float)
    if mode == "exact_ball":
        d = _kernels.distances_from(x, V, float(R))
        return np.flatnonzero(d <= r)
    if mode == "box":
        a_min = rs_constants(R).a_min
        return np.flatnonzero(pseudonorm_many(privileged_coords_many(x, V)) < r / a_min)
    raise ValueError(f"unknown near mode {mode!r}; expected one of {MODES}")


class _Neighborhoods:
    """Near-set oracle over a fixed vertex set.

    With a precomputed cache every lookup is a slice. Without one, a vertex's
    near set is computed the first time it is requested and kept for the rest
    of the run, so vertices the planner never touches cost nothing.
    """

    def __init__(self, verts, r, mode, R, cache: NeighborCache | None):
        if mode not in MODES:
            raise ValueError(f"unknown near mode {mode!r}; expected one of {MODES}")
        self.verts = verts
        self.r = r
        self.mode = mode
        self.R = R
        self.cache = cache
        self.solves = 0
        self.a_min = rs_constants(R).a_min
        reach = r if mode == "exact_ball" else _box_reach(r, self.a_min)
        self.reach = reach * _PREFILTER_SLACK
        self.tree = None if cache is not None else cKDTree(verts[:, :2])
        self._seen: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def __call__(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        if self.cache is not None:
            return self.cache.neighbors(i)
        hit = self._seen.get(i)
        if hit is None:
            cand = np.array(sorted(self.tree.query_ball_point(self.verts[i, :2], self.reach)), dtype=np.int64)
            cand = cand[cand != i]
            hit = self._seen[i] = _filter(self.verts, i, cand, self.r, self.mode, self.R, self.a_min, self)
        return hit


def _filter(verts, i, cand, r, mode, R, a_min, counter):
    if mode == "exact_ball":
        d = _pair_dists(verts, np.full(len(cand), i), cand, R)
        counter.solves += len(cand)
        keep = d <= r
        return cand[keep], d[keep]
    z = privileged_coords_many(verts[i], verts[cand])
    cand = cand[pseudonorm_many(z) < r / a_min]
    d = _pair_dists(verts, np.full(len(cand), i), cand, R)
    counter.solves += len(cand)
    return cand, d


def precompute_cache(V: np.ndarray, r_n: float, mode: str = "exact_ball", R: float = 1.0) -> NeighborCache:
    """Near sets and edge distances for every vertex, computed in one batch."""
    verts = np.ascontiguousarray(np.asarray(V, dtype=float).reshape(-1, 3))
    n = len(verts)
    empty = np.zeros(0, dtype=np.int64)
    if n == 0:
        return NeighborCache(np.zeros(1, dtype=np.int64), empty, np.zeros(0), r_n, mode)
    if mode not in MODES:
        raise ValueError(f"unknown near mode {mode!r}; expected one of {MODES}")
    a_min = rs_constants(R).a_min
    reach = (r_n if mode == "exact_ball" else _box_reach(r_n, a_min)) * _PREFILTER_SLACK
    pairs = cKDTree(verts[:, :2]).query_pairs(reach, output_type="ndarray")
    if len(pairs) == 0:
        return NeighborCache(np.zeros(n + 1, dtype=np.int64), empty, np.zeros(0), r_n, mode)
    lo = np.minimum(pairs[:, 0], pairs[:, 1]).astype(np.int64)
    hi = np.maximum(pairs[:, 0], pairs[:, 1]).astype(np.int64)
    solves = 0
    if mode == "exact_ball":
        d = _kernels.vertex_pair_distances(verts, lo, hi, R)
        solves = len(d)
        keep = d <= r_n
        src = np.concatenate([lo[keep], hi[keep]])
        dst = np.concatenate([hi[keep], lo[keep]])
        dd = np.concatenate([d[keep], d[keep]])
    else:
        rho = r_n / a_min
        fwd = _pseudonorm_pairs(verts, lo, hi) < rho  # hi in box around lo
        bwd = _pseudonorm_pairs(verts, hi, lo) < rho  # lo in box around hi
        any_ = fwd | bwd
        d = np.zeros(len(lo))
        d[any_] = _kernels.vertex_pair_distances(verts, lo[any_], hi[any_], R)
        solves = int(any_.sum())
        src = np.concatenate([lo[fwd], hi[bwd]])
        dst = np.concatenate([hi[fwd], lo[bwd]])
        dd = np.concatenate([d[fwd], d[bwd]])
    order = np.lexsort((dst, src))
    src, dst, dd = src[order], dst[order], dd[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    return NeighborCache(indptr, dst, dd, r_n, mode, solves)


def _pseudonorm_pairs(verts, base, target):
    b = verts[base]
    t = verts[target]
    dx = t[:, 0] - b[:, 0]
    dy = t[:, 1] - b[:, 1]
    c, s = np.cos(b[:, 2]), np.sin(b[:, 2])
    z1 = c * dx + s * dy
    z2 = wrap_angles(t[:, 2] - b[:, 2])
    z3 = s * dx - c * dy
    return np.maximum(np.maximum(np.abs(z1), np.abs(z2)), np.sqrt(np.abs(z3)))


# -- shortest paths ----------------------------------------------------------


def dijkstra(graph, source: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Single-source shortest paths.

    ``graph`` may be a :class:`PlannerGraph` or a scipy sparse matrix. A
    mapping ``{(u, v): w}`` of undirected edges works too; the vertex count is
    then inferred from the largest index.
    Returns ``(cost, predecessor)``; unreachable vertices have infinite cost
    and predecessor -1.
    """
    if isinstance(graph, PlannerGraph):
        mat = _edge_matrix(graph.edges, len(graph.vertices))
    elif isinstance(graph, dict):
        n = 1 + max([source] + [max(k) for k in graph])
        mat = _edge_matrix(graph, n)
    else:
        mat = graph
    cost, pred = _csgraph_dijkstra(mat, directed=True, indices=source, return_predecessors=True)
    pred = np.where(pred < 0, -1, pred).astype(np.int64)
    return cost, pred


def _edge_matrix(edges: dict, n: int) -> csr_matrix:
    if not edges:
        return csr_matrix((n, n))
    keys = np.array(list(edges.keys()), dtype=np.int64).reshape(-1, 2)
    w = np.fromiter(edges.values(), dtype=float, count=len(edges))
    if (w < 0).any():
        raise ValueError("edge weights must be nonnegative")
    rows = np.concatenate([keys[:, 0], keys[:, 1]])
    cols = np.concatenate([keys[:, 1], keys[:, 0]])
    return csr_matrix((np.concatenate([w, w]), (rows, cols)), shape=(n, n))


def _walk_back(pred, v) -> list[int]:
    out = [int(v)]
    while pred[out[-1]] >= 0:
        out.append(int(pred[out[-1]]))
    return out[::-1]


def _edge_paths(verts, chain, R) -> list[RSPath]:
    paths = []
    for a, b in zip(chain[:-1], chain[1:]):
        lo, hi = min(a, b), max(a, b)
        p = steer(verts[lo], verts[hi], R)
        paths.append(p if a == lo else p.reversed())
    return paths


# -- planners ----------------------------------------------------------------


def _setup(scenario: Scenario, n: int, eta: float, seed):
    if n < 1:
        raise ValueError(f"sample count must be at least 1, got {n}")
    seed = scenario.seed if seed is None else int(seed)
    verts = np.ascontiguousarray(np.vstack([scenario.x_init.as_array(), sample_free(scenario, n, seed)]))
    consts = rs_constants(scenario.R)
    r_n = connection_radius(
        max(n, 2), eta, free_space_measure(scenario), HOMOGENEOUS_DIM, consts.A_max
    )
    return seed, verts, r_n


def _collides(scenario: Scenario, verts, lo, hi) -> np.ndarray:
    xy, offsets, bbox, bounds = scenario.packed
    return _kernels.pairs_collide(
        verts, np.asarray(lo, dtype=np.int64), np.asarray(hi, dtype=np.int64), scenario.R,
        scenario.collision_step, xy, offsets, bbox, bounds,
    )


def _resolve_cache(cache, verts, r_n, mode, R):
    if cache is True or cache == "on":
        return precompute_cache(verts, r_n, mode, R)
    if cache in (None, False, "off"):
        return None
    if isinstance(cache, NeighborCache):
        if len(cache) != len(verts) or cache.r != r_n or cache.mode != mode:
            raise ValueError("neighbor cache does not match this vertex set, radius and mode")
        return cache
    raise ValueError(f"cache must be on, off or a NeighborCache, got {cache!r}")


def dprm_plan(
    scenario: Scenario, n: int, eta: float = 0.0, mode: str = "exact_ball", seed=None, cache="on"
) -> tuple[PlanResult, PlannerGraph]:
    t0 = time.perf_counter()
    seed, verts, r_n = _setup(scenario, n, eta, seed)
    nc = _resolve_cache(cache, verts, r_n, mode, scenario.R)
    nbhd = _Neighborhoods(verts, r_n, mode, scenario.R, nc)

    # union of the near relation as canonical (lo, hi) pairs
    los, his, ds = [], [], []
    for v in range(len(verts)):
        nb, d = nbhd(v)
        up = nb > v
        los.append(np.full(int(up.sum()), v, dtype=np.int64))
        his.append(nb[up])
        ds.append(d[up])
        down = ~up
        los.append(nb[down])
        his.append(np.full(int(down.sum()), v, dtype=np.int64))
        ds.append(d[down])
    lo = np.concatenate(los) if los else np.zeros(0, dtype=np.int64)
    hi = np.concatenate(his) if his else np.zeros(0, dtype=np.int64)
    dd = np.concatenate(ds) if ds else np.zeros(0)
    key = lo * len(verts) + hi
    key, first = np.unique(key, return_index=True)
    lo, hi, dd = lo[first], hi[first], dd[first]

    hit = _collides(scenario, verts, lo, hi)
    free = ~hit
    edges = {(int(a), int(b)): float(w) for a, b, w in zip(lo[free], hi[free], dd[free])}
    mat = csr_matrix(
        (np.concatenate([dd[free], dd[free]]), (np.concatenate([lo[free], hi[free]]), np.concatenate([hi[free], lo[free]]))),
        shape=(len(verts), len(verts)),
    )
    cost, pred = dijkstra(mat, 0)

    stats = PlanStats(
        collision_checks=len(lo),
        steering_solves=nbhd.solves + (nc.solves if nc is not None else 0) + len(lo),
        r_n=r_n,
    )
    graph = PlannerGraph(verts, "roadmap", edges, cost=cost, neighbor_cache=nc)
    goal_mask = in_goal_many(scenario.goal, verts) & np.isfinite(cost)
    if not goal_mask.any():
        stats.wall_time = time.perf_counter() - t0
        return PlanResult("failure", [], [], None, stats, "dprm"), graph
    best = cost[goal_mask].min()
    winners = np.flatnonzero(goal_mask & (cost == best))
    tie_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    v_star = int(winners[tie_rng.integers(len(winners))])
    chain = _walk_back(pred, v_star)
    result = PlanResult("success", chain, _edge_paths(verts, chain, scenario.R), float(cost[v_star]), stats, "dprm")
    stats.wall_time = time.perf_counter() - t0
    return result, graph


class _NeighborStore:
    """Near sets laid out for the compiled expansion step.

    Vertex ``i`` owns ``nbr[starts[i]:starts[i] + lens[i]]``. A precomputed
    cache fills every slot up front; otherwise slots are filled on demand
    (``lens[i] == -1`` marks a slot that has not been computed yet).
    """

    def __init__(self, nbhd: _Neighborhoods, n: int):
        self.nbhd = nbhd
        cache = nbhd.cache
        if cache is not None:
            self.starts = cache.indptr[:-1].copy()
            self.lens = np.diff(cache.indptr)
            self.nbr = cache.indices
            self.nbr_d = cache.dists
            self.used = len(cache.indices)
        else:
            self.starts = np.zeros(n, dtype=np.int64)
            self.lens = np.full(n, -1, dtype=np.int64)
            self.nbr = np.zeros(1024, dtype=np.int64)
            self.nbr_d = np.zeros(1024)
            self.used = 0

    def ensure(self, ids) -> None:
        for i in ids:
            i = int(i)
            if self.lens[i] >= 0:
                continue
            nb, d = self.nbhd(i)
            k = len(nb)
            if self.used + k > len(self.nbr):
                size = max(2 * len(self.nbr), self.used + k)
                self.nbr = np.resize(self.nbr, size)
                self.nbr_d = np.resize(self.nbr_d, size)
            self.nbr[self.used : self.used + k] = nb
            self.nbr_d[self.used : self.used + k] = d
            self.starts[i] = self.used
            self.lens[i] = k
            self.used += k
            # the store owns the data now; drop the per-vertex copy
            self.nbhd._seen.pop(i, None)

    def neighbors(self, i: int) -> np.ndarray:
        return self.nbr[self.starts[i] : self.starts[i] + self.lens[i]]


def dfmt_plan(
    scenario: Scenario, n: int, eta: float = 0.0, mode: str = "exact_ball", seed=None, cache="on"
) -> tuple[PlanResult, PlannerGraph]:
    t0 = time.perf_counter()
    seed, verts, r_n = _setup(scenario, n, eta, seed)
    nc = _resolve_cache(cache, verts, r_n, mode, scenario.R)
    nbhd = _Neighborhoods(verts, r_n, mode, scenario.R, nc)
    store = _NeighborStore(nbhd, len(verts))
    N = len(verts)
    xy, offsets, bbox, bounds = scenario.packed
    goal = in_goal_many(scenario.goal, verts)

    cost = np.full(N, np.inf)
    cost[0] = 0.0
    parent = np.full(N, -1, dtype=np.int64)
    edge_d = np.zeros(N)
    unvisited = np.ones(N, dtype=bool)  # W
    unvisited[0] = False
    frontier = np.zeros(N, dtype=bool)  # H
    frontier[0] = True
    heap = [(0.0, 0)]
    added = np.empty(N, dtype=np.int64)  # H_new
    memo = NumbaDict.empty(key_type=nb_types.int64, value_type=nb_types.boolean)
    # per-vertex memory of the last parent search, and the frontier join log
    best_y = np.full(N, -2, dtype=np.int64)
    best_v = np.zeros(N)
    best_d = np.zeros(N)
    seen_upto = np.zeros(N, dtype=np.int64)
    log = np.zeros(N, dtype=np.int64)  # vertex 0 is the first frontier member
    log_len = 1
    checks = 0
    z = 0
    status = "success"
    while not goal[z]:
        if nc is None:
            store.ensure([z])
            xs = store.neighbors(z)
            store.ensure(xs[unvisited[xs]])
        k, c, log_len = _kernels.fmt_expand(
            z, verts, store.starts, store.lens, store.nbr, store.nbr_d, cost, parent, edge_d, unvisited,
            frontier, memo, scenario.R, scenario.collision_step, xy, offsets, bbox, bounds, added,
            best_y, best_v, best_d, seen_upto, log, log_len,
        )
        checks += c
        for x in added[:k].tolist():
            heapq.heappush(heap, (cost[x], x))
        while heap and not frontier[heap[0][1]]:
            heapq.heappop(heap)
        if not heap:
            status = "failure"
            break
        z = heap[0][1]

    tree = np.flatnonzero(parent >= 0)
    edges = {
        (int(min(x, parent[x])), int(max(x, parent[x]))): float(edge_d[x]) for x in tree
    }
    stats = PlanStats(
        collision_checks=checks,
        steering_solves=nbhd.solves + (nc.solves if nc is not None else 0) + checks,
        r_n=r_n,
    )
    graph = PlannerGraph(verts, "tree", edges, parent=parent, cost=cost, neighbor_cache=nc)
    if status == "failure":
        stats.wall_time = time.perf_counter() - t0
        return PlanResult("failure", [], [], None, stats, "dfmt"), graph
    chain = _walk_back(parent, z)
    result = PlanResult("success", chain, _edge_paths(verts, chain, scenario.R), float(cost[z]), stats, "dfmt")
    stats.wall_time = time.perf_counter() - t0
    return result, graph


PLANNERS = {"dprm": dprm_plan, "dfmt": dfmt_plan}


def plan(scenario: Scenario, planner: str, n: int, **kw) -> tuple[PlanResult, PlannerGraph]:
    try:
        fn = PLANNERS[planner]
    except KeyError:
        raise ValueError(f"unknown planner {planner!r}; expected one of {sorted(PLANNERS)}") from None
    return fn(scenario, n, **kw)
