import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcaplan.geometry import Pose
from dcaplan.reeds_shepp import (
    Direction,
    RSSegment,
    SegmentKind,
    end_pose,
    interpolate,
    rs_distance,
    rs_distances,
    rs_distances_paired,
    rs_distances_to,
    sample_path,
    steer,
)
from dcaplan.rs_oracle import oracle_distance
from oracles import lattice_distance, random_poses

# shortest turn-in-place to the opposite heading at R = 1, frozen after
# agreement of the closed form, the brute-force oracle and the lattice search
U_TURN_GOLDEN = math.pi

coord = st.floats(-8, 8, allow_nan=False)
heading = st.floats(-math.pi, math.pi, allow_nan=False)
pose = st.tuples(coord, coord, heading)


def test_straight_ahead_is_one_forward_segment():
    path = steer((0, 0, 0), (5, 0, 0), 1.0)
    assert path.segments == (RSSegment(SegmentKind.STRAIGHT, Direction.FORWARD, 5.0),)
    assert path.total_length == 5.0


def test_straight_behind_is_one_reverse_segment():
    path = steer((0, 0, 0), (-2, 0, 0), 1.0)
    assert [s.label for s in path.segments] == ["S-"]
    assert path.total_length == pytest.approx(2.0)


def test_identity_is_empty_path():
    path = steer((0, 0, 0), (0, 0, 0), 1.0)
    assert path.segments == ()
    assert path.total_length == 0.0


def test_u_turn_golden():
    d = rs_distance((0, 0, 0), (0, 0, math.pi), 1.0)
    assert d > 0
    assert d == pytest.approx(U_TURN_GOLDEN, abs=1e-12)
    assert oracle_distance((0, 0, 0), (0, 0, math.pi), 1.0) == pytest.approx(d, abs=1e-6)


@pytest.mark.slow
def test_u_turn_lattice_cross_check():
    # the lattice is coarse, so it only brackets the value loosely
    approx = lattice_distance((0.0, 0.0, math.pi), R=1.0, cell=0.1)
    assert abs(approx - U_TURN_GOLDEN) < 0.1 * U_TURN_GOLDEN


@pytest.mark.parametrize(
    "goal, R",
    [((1.0, 1.0, math.pi / 2), 1.0), ((-1.5, 0.5, 2.5), 1.0), ((2.0, -1.0, -1.0), 0.5), ((0.3, 0.2, 0.1), 1.0)],
)
def test_lattice_bounds_closed_form(goal, R):
    d = rs_distance((0, 0, 0), goal, R)
    approx = lattice_distance(goal, R=R, cell=0.05)
    assert approx == pytest.approx(d, rel=0.15, abs=0.1)


def test_distance_straight_known_value():
    assert rs_distance((0, 0, 0), (3, 0, 0), 1.0) == 3.0
    assert oracle_distance((0, 0, 0), (4, 0, 0), 1.0) == pytest.approx(4.0, abs=1e-6)


def test_closed_form_matches_oracle_on_random_pairs():
    rng = np.random.default_rng(99)
    a = random_poses(rng, 60)
    b = random_poses(rng, 60)
    for p, q in zip(a, b):
        assert rs_distance(p, q, 1.0) == pytest.approx(oracle_distance(p, q, 1.0), abs=1e-6)


def test_closed_form_matches_oracle_near_pairs():
    rng = np.random.default_rng(5)
    a = random_poses(rng, 40, box=1.0)
    b = a + rng.normal(scale=0.3, size=a.shape)
    for p, q in zip(a, b):
        assert rs_distance(p, q, 1.0) == pytest.approx(oracle_distance(p, q, 1.0), abs=1e-6)


def test_oracle_refinement_does_not_increase_estimate():
    rng = np.random.default_rng(17)
    for p, q in zip(random_poses(rng, 8, 4.0), random_poses(rng, 8, 4.0)):
        coarse = oracle_distance(p, q, 1.0, resolution=0.05)
        fine = oracle_distance(p, q, 1.0, resolution=0.01)
        assert fine <= coarse + 1e-9


@settings(max_examples=200, deadline=None)
@given(pose, pose, pose, st.sampled_from([0.5, 1.0, 2.0]))
def test_metric_axioms(a, b, c, R):
    dab = rs_distance(a, b, R)
    assert dab >= 0
    assert dab == pytest.approx(rs_distance(b, a, R), abs=1e-9)
    assert rs_distance(a, c, R) <= dab + rs_distance(b, c, R) + 1e-9
    assert dab >= math.hypot(a[0] - b[0], a[1] - b[1]) - 1e-9


@settings(max_examples=200, deadline=None)
@given(pose, pose, st.floats(0.1, 10))
def test_scale_equivariance(a, b, k):
    sa = (k * a[0], k * a[1], a[2])
    sb = (k * b[0], k * b[1], b[2])
    assert rs_distance(sa, sb, k) == pytest.approx(k * rs_distance(a, b, 1.0), rel=1e-9, abs=1e-9)


@settings(max_examples=300, deadline=None)
@given(pose, pose, st.sampled_from([0.25, 1.0, 3.0]))
def test_steer_reaches_goal(a, b, R):
    path = steer(a, b, R)
    end = end_pose(path, a)
    assert math.hypot(end.x - b[0], end.y - b[1]) <= 1e-9 * R
    assert abs(math.remainder(end.theta - b[2], 2 * math.pi)) <= 1e-9
    assert path.total_length == pytest.approx(sum(s.length for s in path.segments), abs=1e-12)
    assert path.total_length == rs_distance(a, b, R)
    assert len(path.segments) <= 5
    for s in path.segments:
        if s.kind is not SegmentKind.STRAIGHT:
            assert s.length <= 2 * math.pi * R + 1e-12


def test_reversed_path_ends_at_start():
    a, b = (1.0, 2.0, 0.3), (-1.0, 0.5, 2.9)
    path = steer(a, b, 1.0)
    back = end_pose(path.reversed(), b)
    assert (back.x, back.y) == pytest.approx(a[:2], abs=1e-9)
    assert back.theta == pytest.approx(a[2], abs=1e-9)


def test_interpolate_endpoints_and_midpoint():
    path = steer((0, 0, 0), (5, 0, 0), 1.0)
    assert tuple(interpolate(path, Pose(0, 0, 0), 0.0)) == (0.0, 0.0, 0.0)
    assert tuple(interpolate(path, (0, 0, 0), 2.0)) == pytest.approx((2.0, 0.0, 0.0))
    curvy = steer((0, 0, 0), (1, 2, -2.0), 1.0)
    assert tuple(interpolate(curvy, (0, 0, 0), curvy.total_length)) == pytest.approx(
        tuple(end_pose(curvy, (0, 0, 0)))
    )


@pytest.mark.parametrize("s", [-0.1, 5.0001])
def test_interpolate_rejects_out_of_range(s):
    path = steer((0, 0, 0), (5, 0, 0), 1.0)
    with pytest.raises(ValueError):
        interpolate(path, (0, 0, 0), s)


@settings(max_examples=100, deadline=None)
@given(pose, pose, st.floats(0, 1))
def test_prefix_distance_bounded_by_arc_length(a, b, frac):
    path = steer(a, b, 1.0)
    s = frac * path.total_length
    assert rs_distance(a, interpolate(path, a, s), 1.0) <= s + 1e-9


def test_sample_path_spacing():
    path = steer((0, 0, 0), (1, 1, 1.0), 1.0)
    pts = sample_path(path, (0, 0, 0), 0.1)
    assert len(pts) == math.ceil(path.total_length / 0.1) + 1
    assert tuple(pts[-1]) == pytest.approx(tuple(end_pose(path, (0, 0, 0))))
    with pytest.raises(ValueError):
        sample_path(path, (0, 0, 0), 0.0)


def test_batch_helpers_agree_with_scalar():
    rng = np.random.default_rng(3)
    a, b = random_poses(rng, 30), random_poses(rng, 30)
    ref = np.array([rs_distance(p, q, 0.7) for p, q in zip(a, b)])
    assert np.array_equal(rs_distances_paired(a, b, 0.7), ref)
    assert np.array_equal(rs_distances(a[0], b, 0.7)[:1], ref[:1])
    assert rs_distances_to(a, b[0], 0.7)[0] == ref[0]
    with pytest.raises(ValueError):
        rs_distances_paired(a, b[:-1], 0.7)


def test_rejects_nonpositive_radius():
    with pytest.raises(ValueError):
        steer((0, 0, 0), (1, 0, 0), 0.0)
    with pytest.raises(ValueError):
        rs_distance((0, 0, 0), (1, 0, 0), -1.0)
    with pytest.raises(ValueError):
        oracle_distance((0, 0, 0), (1, 0, 0), 1.0, resolution=0.0)
