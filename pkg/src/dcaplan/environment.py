"""Planning problems and the free-space queries that planners make against them.

The car is a point in the plane, so obstacles constrain only ``(x, y)``.
Obstacles are closed sets: a path that touches an obstacle boundary is in
collision, and so is a path that leaves the workspace rectangle.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dcaplan import _kernels
from dcaplan.geometry import TWO_PI, Pose
from dcaplan.reeds_shepp import RSPath, sample_points, steer

SCENARIO_DIR = Path(__file__).with_name("scenarios")

# sampling is drawn in fixed-size blocks so that a shorter request is always
# a prefix of a longer one with the same seed
_BLOCK = 4096


class ScenarioError(ValueError):
    """Raised for malformed or inconsistent scenario descriptions."""


class SamplingError(RuntimeError):
    """Raised when rejection sampling exhausts its attempt budget."""


@dataclass(frozen=True)
class GoalRegion:
    """Planar disc with any heading accepted."""

    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ScenarioError(f"goal radius must be positive, got {self.radius}")


def in_goal(goal: GoalRegion, p) -> bool:
    x, y, *_ = p
    return math.hypot(float(x) - goal.center[0], float(y) - goal.center[1]) <= goal.radius


def in_goal_many(goal: GoalRegion, pts: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(pts)
    return np.hypot(pts[:, 0] - goal.center[0], pts[:, 1] - goal.center[1]) <= goal.radius


def polygon_area(poly: np.ndarray) -> float:
    """Signed shoelace area, positive for counterclockwise vertex order."""
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _edges(poly):
    n = len(poly)
    return [(poly[i], poly[(i + 1) % n]) for i in range(n)]


def is_simple(poly: np.ndarray) -> bool:
    """True if no two non-adjacent edges meet and the polygon has area."""
    n = len(poly)
    if n < 3 or abs(polygon_area(poly)) <= 0.0:
        return False
    edges = _edges(poly)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            (a, b), (c, d) = edges[i], edges[j]
            if _kernels.segments_touch(a[0], a[1], b[0], b[1], c[0], c[1], d[0], d[1]):
                return False
    return True


def _polygons_meet(p: np.ndarray, q: np.ndarray) -> bool:
    for a, b in _edges(p):
        for c, d in _edges(q):
            if _kernels.segments_touch(a[0], a[1], b[0], b[1], c[0], c[1], d[0], d[1]):
                return True
    # one polygon strictly inside the other
    qxy = np.ascontiguousarray(q)
    pxy = np.ascontiguousarray(p)
    return _kernels.point_in_polygon(p[0, 0], p[0, 1], qxy, 0, len(q)) or _kernels.point_in_polygon(
        q[0, 0], q[0, 1], pxy, 0, len(p)
    )


@dataclass
class Scenario:
    bounds: tuple[float, float, float, float]
    obstacles: list[np.ndarray]
    x_init: Pose
    goal: GoalRegion
    R: float
    collision_step: float | None = None
    seed: int = 0
    name: str = "scenario"
    # packed obstacle arrays handed to the compiled collision code
    _xy: np.ndarray = field(init=False, repr=False)
    _offsets: np.ndarray = field(init=False, repr=False)
    _bbox: np.ndarray = field(init=False, repr=False)
    _bounds: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.bounds = tuple(float(v) for v in self.bounds)
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmax > xmin and ymax > ymin):
            raise ScenarioError(f"bounds must satisfy xmin < xmax and ymin < ymax, got {self.bounds}")
        if not self.R > 0:
            raise ScenarioError(f"turning radius R must be positive, got {self.R}")
        self.R = float(self.R)
        if self.collision_step is None:
            self.collision_step = 0.1 * self.R
        if not self.collision_step > 0:
            raise ScenarioError(f"collision_step must be positive, got {self.collision_step}")
        self.collision_step = float(self.collision_step)
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ScenarioError(f"seed must be a nonnegative integer, got {self.seed!r}")
        self.seed = int(self.seed)
        if not isinstance(self.x_init, Pose):
            self.x_init = Pose.from_seq(self.x_init)

        polys = []
        for k, raw in enumerate(self.obstacles):
            poly = np.asarray(raw, dtype=float)
            if poly.ndim != 2 or poly.shape[1] != 2:
                raise ScenarioError(f"obstacle {k} must be a list of [x, y] vertices")
            if not is_simple(poly):
                raise ScenarioError(f"obstacle {k} is not a simple polygon")
            if polygon_area(poly) < 0:
                poly = poly[::-1].copy()
            if (poly[:, 0] < xmin).any() or (poly[:, 0] > xmax).any() or (poly[:, 1] < ymin).any() or (
                poly[:, 1] > ymax
            ).any():
                raise ScenarioError(f"obstacle {k} leaves the workspace bounds")
            polys.append(poly)
        for i in range(len(polys)):
            for j in range(i + 1, len(polys)):
                if _polygons_meet(polys[i], polys[j]):
                    raise ScenarioError(f"obstacles {i} and {j} are not disjoint")
        self.obstacles = polys
        self._pack()

        if not self.point_free(self.x_init.x, self.x_init.y):
            raise ScenarioError(f"x_init {tuple(self.x_init)} is not in free space")
        if not self._goal_reachable_area():
            raise ScenarioError("goal region does not intersect free space")

    def _pack(self):
        sizes = [len(p) for p in self.obstacles]
        self._offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self._xy = np.ascontiguousarray(np.concatenate(self.obstacles) if self.obstacles else np.zeros((0, 2)))
        self._bbox = np.array(
            [[p[:, 0].min(), p[:, 1].min(), p[:, 0].max(), p[:, 1].max()] for p in self.obstacles]
        ).reshape(-1, 4)
        self._bounds = np.array(self.bounds)

    def _goal_reachable_area(self) -> bool:
        # polar grid over the goal disc; any free grid point certifies overlap
        cx, cy = self.goal.center
        rr = np.linspace(0.0, self.goal.radius, 9)
        aa = np.linspace(0.0, TWO_PI, 32, endpoint=False)
        pts = np.array([[cx + r * math.cos(a), cy + r * math.sin(a)] for r in rr for a in aa])
        return bool(self.points_free(pts).any())

    @property
    def packed(self):
        """(xy, offsets, bbox, bounds) arrays for the compiled collision code."""
        return self._xy, self._offsets, self._bbox, self._bounds

    def points_free(self, pts: np.ndarray) -> np.ndarray:
        pts = np.ascontiguousarray(np.atleast_2d(pts)[:, :2], dtype=float)
        return _kernels.points_free(pts, self._xy, self._offsets, self._bbox, self._bounds)

    def point_free(self, x: float, y: float) -> bool:
        return bool(self.points_free(np.array([[x, y]]))[0])

    def with_changes(self, **kw) -> "Scenario":
        args = dict(
            bounds=self.bounds,
            obstacles=[p.copy() for p in self.obstacles],
            x_init=self.x_init,
            goal=self.goal,
            R=self.R,
            collision_step=self.collision_step,
            seed=self.seed,
            name=self.name,
        )
        args.update(kw)
        return Scenario(**args)


# -- loading -----------------------------------------------------------------


def _reject_constant(name):
    raise ValueError(f"non-finite number {name} is not allowed")


def _line_of(text: str, key: str) -> int:
    needle = f'"{key}"'
    for k, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return k
    return 1


def _number(doc, key, text, where=None):
    v = doc.get(key) if where is None else where
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ScenarioError(f"line {_line_of(text, key)}: field '{key}' must be a finite number, got {v!r}")
    return float(v)


def scenario_from_json(text: str, name: str = "scenario") -> Scenario:
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except ValueError as exc:
        raise ScenarioError(f"line 1: {exc}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("line 1: scenario must be a JSON object")
    required = ("bounds", "obstacles", "x_init", "goal", "R")
    for key in required:
        if key not in doc:
            raise ScenarioError(f"line 1: missing required field '{key}'")

    def seq(key, length):
        v = doc[key]
        if not isinstance(v, list) or len(v) != length:
            raise ScenarioError(f"line {_line_of(text, key)}: field '{key}' must be a list of {length} numbers")
        return [_number(doc, key, text, item) for item in v]

    bounds = seq("bounds", 4)
    x_init = seq("x_init", 3)
    obstacles = doc["obstacles"]
    line = _line_of(text, "obstacles")
    if not isinstance(obstacles, list):
        raise ScenarioError(f"line {line}: field 'obstacles' must be a list of polygons")
    polys = []
    for k, poly in enumerate(obstacles):
        if not isinstance(poly, list) or not all(isinstance(v, list) and len(v) == 2 for v in poly):
            raise ScenarioError(f"line {line}: obstacle {k} must be a list of [x, y] pairs")
        polys.append([[_number(doc, "obstacles", text, c) for c in v] for v in poly])
    goal = doc["goal"]
    if not isinstance(goal, dict) or "center" not in goal or "radius" not in goal:
        raise ScenarioError(f"line {_line_of(text, 'goal')}: field 'goal' needs 'center' and 'radius'")
    center = goal["center"]
    if not isinstance(center, list) or len(center) != 2:
        raise ScenarioError(f"line {_line_of(text, 'center')}: goal center must be [x, y]")
    center = tuple(_number(goal, "center", text, c) for c in center)
    radius = _number(goal, "radius", text)
    R = _number(doc, "R", text)
    step = _number(doc, "collision_step", text) if doc.get("collision_step") is not None else None
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0 or seed >= 2**64:
        raise ScenarioError(f"line {_line_of(text, 'seed')}: field 'seed' must be an unsigned 64-bit integer")
    try:
        return Scenario(
            bounds=tuple(bounds),
            obstacles=polys,
            x_init=Pose.from_seq(x_init),
            goal=GoalRegion(center, radius),
            R=R,
            collision_step=step,
            seed=seed,
            name=name,
        )
    except ScenarioError as exc:
        raise ScenarioError(f"line 1: {exc}") from None


def load_scenario(path) -> Scenario:
    """Load a scenario file; bare names resolve against the shipped scenarios."""
    p = Path(path)
    if not p.exists() and not p.suffix:
        p = SCENARIO_DIR / f"{path}.json"
    elif not p.exists() and (SCENARIO_DIR / p.name).exists():
        p = SCENARIO_DIR / p.name
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc.strerror}") from None
    return scenario_from_json(text, name=p.stem)


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "bounds": list(sc.bounds),
        "obstacles": [p.tolist() for p in sc.obstacles],
        "x_init": list(sc.x_init),
        "goal": {"center": list(sc.goal.center), "radius": sc.goal.radius},
        "R": sc.R,
        "collision_step": sc.collision_step,
        "seed": sc.seed,
    }


# -- queries -----------------------------------------------------------------


def sample_free(scenario: Scenario, n: int, seed: int, max_attempts: int | None = None) -> np.ndarray:
    """``n`` i.i.d. uniform poses on the free set, as rows (x, y, theta).

    Headings are uniform on (-pi, pi]. ``seed`` is an integer or a sequence of
    integers. Output is a pure function of ``(scenario, n, seed)``, and the
    first ``k`` rows do not depend on ``n``.
    """
    if n < 0:
        raise ValueError(f"sample count must be nonnegative, got {n}")
    out = np.empty((n, 3))
    if n == 0:
        return out
    budget = 1000 * n if max_attempts is None else max_attempts
    rng = np.random.default_rng(seed)
    lo = np.array(scenario.bounds[:2])
    span = np.array(scenario.bounds[2:]) - lo
    filled = attempts = 0
    while filled < n:
        if attempts >= budget:
            raise SamplingError(f"drew {attempts} candidates but found only {filled} of {n} free samples")
        u = rng.random((_BLOCK, 3))
        block = np.empty_like(u)
        block[:, :2] = lo + u[:, :2] * span
        block[:, 2] = math.pi - TWO_PI * u[:, 2]
        take = min(_BLOCK, budget - attempts)
        block = block[:take]
        attempts += take
        good = block[scenario.points_free(block)]
        k = min(len(good), n - filled)
        out[filled : filled + k] = good[:k]
        filled += k
    return out


def polyline_collides(scenario: Scenario, pts: np.ndarray) -> bool:
    xy, offsets, bbox, bounds = scenario.packed
    pts = np.ascontiguousarray(np.atleast_2d(pts)[:, :2], dtype=float)
    return bool(_kernels.polyline_collides(pts, xy, offsets, bbox, bounds))


def collision_free(scenario: Scenario, start, path: RSPath, step: float | None = None) -> bool:
    """Polyline check of ``path`` driven from ``start`` at spacing ``step``."""
    step = scenario.collision_step if step is None else step
    return not polyline_collides(scenario, sample_points(path, start, step))


def edge_collision_free(scenario: Scenario, a, b, step: float | None = None) -> bool:
    return collision_free(scenario, a, steer(a, b, scenario.R), step)


def free_area(scenario: Scenario) -> float:
    xmin, ymin, xmax, ymax = scenario.bounds
    return (xmax - xmin) * (ymax - ymin) - sum(abs(polygon_area(p)) for p in scenario.obstacles)


def free_space_measure(scenario: Scenario) -> float:
    """Volume of the free configuration space: planar free area times 2 pi."""
    for k, p in enumerate(scenario.obstacles):
        if not is_simple(p):
            raise ScenarioError(f"obstacle {k} is not a simple polygon")
    return TWO_PI * free_area(scenario)
