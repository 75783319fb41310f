"""Poses, privileged coordinates and the ball-box constants of the car.

The car's distribution is spanned by the drive field ``(cos th, sin th, 0)``
and the steering field ``(0, 0, 1)``; their bracket ``(sin th, -cos th, 0)``
is the lateral direction. Coordinates along those three fields carry weights
``(1, 1, 2)``, so the homogeneous dimension is 4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

WEIGHTS = (1, 1, 2)
HOMOGENEOUS_DIM = sum(WEIGHTS)


def wrap_angle(theta: float) -> float:
    """Canonical heading in (-pi, pi]; -pi maps to +pi."""
    a = math.fmod(theta + math.pi, TWO_PI)
    if a <= 0.0:
        a += TWO_PI
    return a - math.pi


def wrap_angles(theta: np.ndarray) -> np.ndarray:
    a = np.fmod(np.asarray(theta, dtype=float) + math.pi, TWO_PI)
    a = np.where(a <= 0.0, a + TWO_PI, a)
    return a - math.pi


@dataclass(frozen=True)
class Pose:
    """Planar position plus heading. ``theta`` is stored wrapped to (-pi, pi]."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    @classmethod
    def from_seq(cls, seq) -> "Pose":
        x, y, theta = seq
        return cls(x, y, theta)

    def __iter__(self):
        yield self.x
        yield self.y
        yield self.theta


@dataclass(frozen=True)
class PrivCoords:
    """Frame coordinates of a target pose seen from a base pose.

    ``z1`` runs along the heading, ``z2`` is the heading difference and ``z3``
    the lateral offset along the bracket direction.
    """

    z1: float
    z2: float
    z3: float

    def __iter__(self):
        yield self.z1
        yield self.z2
        yield self.z3


@dataclass(frozen=True)
class BallBoxConstants:
    a_min: float
    A_max: float
    sigma_min: float
    s: int


def privileged_coords(base: Pose, target: Pose) -> PrivCoords:
    """Frame coordinates of ``target`` seen from ``base``; plain (x, y, theta) sequences work too."""
    base = base if isinstance(base, Pose) else Pose.from_seq(base)
    target = target if isinstance(target, Pose) else Pose.from_seq(target)
    th0 = base.theta
    dx = target.x - base.x
    dy = target.y - base.y
    c, s = math.cos(th0), math.sin(th0)
    return PrivCoords(c * dx + s * dy, wrap_angle(target.theta - th0), s * dx - c * dy)


def privileged_coords_many(base, targets: np.ndarray) -> np.ndarray:
    """Vectorised :func:`privileged_coords`; ``targets`` has rows (x, y, theta)."""
    base = np.asarray(tuple(base), dtype=float)
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    dx = targets[:, 0] - base[0]
    dy = targets[:, 1] - base[1]
    c, s = math.cos(base[2]), math.sin(base[2])
    out = np.empty((targets.shape[0], 3))
    out[:, 0] = c * dx + s * dy
    out[:, 1] = wrap_angles(targets[:, 2] - base[2])
    out[:, 2] = s * dx - c * dy
    return out


def pseudonorm(z) -> float:
    """Weighted box norm max(|z1|, |z2|, |z3|^(1/2))."""
    z1, z2, z3 = z
    return max(abs(z1), abs(z2), math.sqrt(abs(z3)))


def pseudonorm_many(z: np.ndarray) -> np.ndarray:
    z = np.atleast_2d(z)
    return np.maximum(np.maximum(np.abs(z[:, 0]), np.abs(z[:, 1])), np.sqrt(np.abs(z[:, 2])))


def in_box(base: Pose, target: Pose, r: float) -> bool:
    """Membership in the weighted box {pseudonorm <= r} around ``base``."""
    return pseudonorm(privileged_coords(base, target)) <= r


def box_volume(r: float, D: int = HOMOGENEOUS_DIM) -> float:
    if r < 0:
        raise ValueError(f"box radius must be nonnegative, got {r}")
    return r**D


def connection_radius(n: int, eta: float, mu_free: float, D: int, A_max: float) -> float:
    """Connection radius 4 A (1+eta)^(1/D) (mu/D)^(1/D) (log n / n)^(1/D)."""
    if n < 2:
        raise ValueError(f"connection radius needs n >= 2, got {n}")
    if eta < 0:
        raise ValueError(f"eta must be nonnegative, got {eta}")
    if mu_free <= 0 or A_max <= 0 or D <= 0:
        raise ValueError("mu_free, A_max and D must be positive")
    inv = 1.0 / D
    return 4.0 * A_max * (1.0 + eta) ** inv * (mu_free / D) ** inv * (math.log(n) / n) ** inv


def rs_constants(R: float) -> BallBoxConstants:
    """Ball-box constants for the Reeds-Shepp car with turning radius ``R``."""
    if not R > 0:
        raise ValueError(f"turning radius must be positive, got {R}")
    a = math.sqrt(2.0 * R)
    return BallBoxConstants(a_min=a, A_max=2.0 * a, sigma_min=R, s=2)
