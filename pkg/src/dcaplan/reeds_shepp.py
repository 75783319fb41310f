"""Optimal steering for the Reeds-Shepp car.

The car moves at unit speed, forward or in reverse, with turning radius at
least ``R``. The shortest path between two poses is found by solving every
candidate word (CSC, CCC, CCCC, CC(pi/2)SC and CC(pi/2)SC(pi/2)C families
with their reflections and time reversals) in closed form and keeping the
shortest. Path length is planar arc length.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from dcaplan import _kernels
from dcaplan.geometry import Pose

# endpoint reconstruction tolerance, in units of R
ENDPOINT_TOL = 1e-9


class SegmentKind(enum.Enum):
    LEFT = "L"
    STRAIGHT = "S"
    RIGHT = "R"


class Direction(enum.Enum):
    FORWARD = 1
    REVERSE = -1


_KIND_FROM_CODE = {
    _kernels.LEFT: SegmentKind.LEFT,
    _kernels.STRAIGHT: SegmentKind.STRAIGHT,
    _kernels.RIGHT: SegmentKind.RIGHT,
}
_CODE_FROM_KIND = {v: k for k, v in _KIND_FROM_CODE.items()}


@dataclass(frozen=True)
class RSSegment:
    kind: SegmentKind
    direction: Direction
    length: float  # arc length in workspace units

    def __post_init__(self):
        if self.length < 0:
            raise ValueError(f"segment length must be nonnegative, got {self.length}")

    @property
    def label(self) -> str:
        return self.kind.value + ("+" if self.direction is Direction.FORWARD else "-")


@dataclass(frozen=True)
class RSPath:
    segments: tuple[RSSegment, ...]
    total_length: float
    word: str
    radius: float

    def __len__(self):
        return len(self.segments)

    def kernel_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(kind codes, signed normalized lengths) as the compiled code expects."""
        kinds = np.zeros(5, dtype=np.int64)
        lens = np.zeros(5)
        for k, seg in enumerate(self.segments):
            kinds[k] = _CODE_FROM_KIND[seg.kind]
            lens[k] = seg.direction.value * seg.length / self.radius
        return kinds, lens

    def reversed(self) -> "RSPath":
        """The same curve traversed from its end back to its start."""
        segs = tuple(
            RSSegment(s.kind, Direction(-s.direction.value), s.length) for s in reversed(self.segments)
        )
        return RSPath(segs, self.total_length, "".join(s.label for s in segs), self.radius)


def _as_pose(p) -> Pose:
    return p if isinstance(p, Pose) else Pose.from_seq(p)


def _path_from_state(state: np.ndarray, radius: float) -> RSPath:
    word = int(state[1])
    segs = []
    for code, t in zip(_kernels.WORDS[word], state[2:7]):
        if code == _kernels.NOP or t == 0.0:
            continue
        direction = Direction.FORWARD if t > 0 else Direction.REVERSE
        segs.append(RSSegment(_KIND_FROM_CODE[int(code)], direction, abs(t) * radius))
    segs = tuple(segs)
    # same expression as the distance kernel, so both agree bit for bit
    total = float(state[0] * radius)
    return RSPath(segs, total, "".join(s.label for s in segs), radius)


def _advance(x, y, th, seg: RSSegment, length: float, radius: float):
    t = seg.direction.value * length / radius
    return _kernels.advance(x, y, th, _CODE_FROM_KIND[seg.kind], t, radius)


def end_pose(path: RSPath, start) -> Pose:
    start = _as_pose(start)
    x, y, th = start
    for seg in path.segments:
        x, y, th = _advance(x, y, th, seg, seg.length, path.radius)
    return Pose(x, y, th)


def steer(start, goal, R: float) -> RSPath:
    """Shortest Reeds-Shepp path from ``start`` to ``goal``.

    Raises ``RuntimeError`` if the integrated path misses ``goal``; that can
    only happen through a solver defect.
    """
    if not R > 0:
        raise ValueError(f"turning radius must be positive, got {R}")
    a = _as_pose(start)
    b = _as_pose(goal)
    state = _kernels.solve(a.x, a.y, a.theta, b.x, b.y, b.theta, float(R))
    path = _path_from_state(state, float(R))
    end = end_pose(path, a)
    dth = abs(math.remainder(end.theta - b.theta, 2.0 * math.pi))
    if math.hypot(end.x - b.x, end.y - b.y) > ENDPOINT_TOL * R or dth > ENDPOINT_TOL:
        raise RuntimeError(f"steer({a}, {b}, R={R}) produced {path.word} ending at {end}")
    return path


def rs_distance(start, goal, R: float) -> float:
    if not R > 0:
        raise ValueError(f"turning radius must be positive, got {R}")
    a = _as_pose(start)
    b = _as_pose(goal)
    return float(_kernels.distance(a.x, a.y, a.theta, b.x, b.y, b.theta, float(R)))


def rs_distances(start, goals: np.ndarray, R: float) -> np.ndarray:
    """Distances from one pose to each row (x, y, theta) of ``goals``."""
    p = np.asarray(tuple(_as_pose(start)), dtype=float)
    q = np.ascontiguousarray(np.atleast_2d(goals), dtype=float)
    return _kernels.distances_from(p, q, float(R))


def rs_distances_to(starts: np.ndarray, goal, R: float) -> np.ndarray:
    """Distances from each row of ``starts`` to one pose."""
    p = np.asarray(tuple(_as_pose(goal)), dtype=float)
    q = np.ascontiguousarray(np.atleast_2d(starts), dtype=float)
    return _kernels.distances_to(q, p, float(R))


def rs_distances_paired(starts: np.ndarray, goals: np.ndarray, R: float) -> np.ndarray:
    a = np.ascontiguousarray(np.atleast_2d(starts), dtype=float)
    b = np.ascontiguousarray(np.atleast_2d(goals), dtype=float)
    if a.shape != b.shape:
        raise ValueError("starts and goals must have the same shape")
    return _kernels.paired_distances(a, b, float(R))


def interpolate(path: RSPath, start, s: float) -> Pose:
    """Pose reached after arc length ``s`` along ``path`` from ``start``."""
    if s < 0 or s > path.total_length:
        raise ValueError(f"arc length {s} outside [0, {path.total_length}]")
    x, y, th = _as_pose(start)
    remaining = s
    for seg in path.segments:
        if remaining <= seg.length:
            x, y, th = _advance(x, y, th, seg, remaining, path.radius)
            return Pose(x, y, th)
        x, y, th = _advance(x, y, th, seg, seg.length, path.radius)
        remaining -= seg.length
    return Pose(x, y, th)


def sample_path(path: RSPath, start, step: float) -> np.ndarray:
    """Poses at arc lengths 0, step, 2 step, ... plus the endpoint (rows x, y, theta)."""
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    n = math.ceil(path.total_length / step) if path.total_length > 0 else 0
    out = np.empty((n + 1, 3))
    for k in range(n + 1):
        s = path.total_length if k == n else min(k * step, path.total_length)
        out[k] = tuple(interpolate(path, start, s))
    return out


def sample_points(path: RSPath, start, step: float) -> np.ndarray:
    """Planar polyline used for collision checks, compiled fast path."""
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    x, y, th = _as_pose(start)
    kinds, lens = path.kernel_arrays()
    return _kernels.sample_points(x, y, th, kinds, lens, path.radius, float(step))
