import json
import math

import numpy as np
import pytest

from dcaplan.environment import (
    GoalRegion,
    SamplingError,
    Scenario,
    ScenarioError,
    collision_free,
    edge_collision_free,
    free_area,
    free_space_measure,
    in_goal,
    in_goal_many,
    is_simple,
    load_scenario,
    polygon_area,
    polyline_collides,
    sample_free,
    scenario_from_json,
    scenario_to_dict,
)
from dcaplan.geometry import Pose
from dcaplan.reeds_shepp import steer
from oracles import random_poses

SQUARE = [[4, 4], [6, 4], [6, 6], [4, 6]]


def make(obstacles=(), **kw):
    args = dict(
        bounds=(0, 0, 10, 10),
        obstacles=list(obstacles),
        x_init=Pose(1, 1, 0),
        goal=GoalRegion((9, 9), 0.5),
        R=1.0,
    )
    args.update(kw)
    return Scenario(**args)


def doc(**kw):
    d = {
        "bounds": [0, 0, 10, 10],
        "obstacles": [SQUARE],
        "x_init": [1, 1, 0],
        "goal": {"center": [9, 9], "radius": 0.5},
        "R": 1.0,
        "collision_step": 0.1,
        "seed": 42,
    }
    d.update(kw)
    return d


# -- scenario files ------------------------------------------------------------


@pytest.mark.parametrize("name", ["maze", "open", "trivial", "walled"])
def test_shipped_scenarios_load(name):
    sc = load_scenario(name)
    assert sc.name == name
    assert sc.collision_step > 0
    assert sc.point_free(sc.x_init.x, sc.x_init.y)


def test_maze_corridors_fit_four_turning_radii(maze):
    assert maze.R == 0.25
    assert maze.collision_step == pytest.approx(0.1 * maze.R)


def test_json_round_trip():
    sc = scenario_from_json(json.dumps(doc()))
    again = scenario_from_json(json.dumps(scenario_to_dict(sc)))
    assert scenario_to_dict(again) == scenario_to_dict(sc)
    assert sc.seed == 42


def test_default_collision_step_is_tenth_of_radius():
    d = doc(R=0.5)
    del d["collision_step"]
    assert scenario_from_json(json.dumps(d)).collision_step == 0.05


def test_malformed_json_reports_line():
    text = '{\n  "bounds": [0, 0, 10, 10],\n  "obstacles": [\n'
    with pytest.raises(ScenarioError, match=r"^line \d+"):
        scenario_from_json(text)


@pytest.mark.parametrize("literal", ["NaN", "Infinity", "-Infinity"])
def test_non_finite_numbers_rejected(literal):
    text = json.dumps(doc()).replace('"R": 1.0', f'"R": {literal}')
    with pytest.raises(ScenarioError):
        scenario_from_json(text)


def test_bad_field_message_points_at_its_line():
    text = json.dumps(doc(R="one"), indent=2)
    line = next(k for k, s in enumerate(text.splitlines(), 1) if '"R"' in s)
    with pytest.raises(ScenarioError, match=f"^line {line}:"):
        scenario_from_json(text)


@pytest.mark.parametrize(
    "change",
    [
        dict(bounds=[0, 0, 10]),
        dict(R=0),
        dict(R=-1),
        dict(collision_step=0),
        dict(seed=-1),
        dict(seed=2**64),
        dict(seed=1.5),
        dict(x_init=[5, 5, 0]),
        dict(goal={"center": [5, 5], "radius": 0.5}),
        dict(goal={"center": [9, 9]}),
        dict(goal={"center": [9, 9], "radius": 0}),
        dict(obstacles=[[[0, 0], [2, 2], [2, 0], [0, 2]]]),
        dict(obstacles=[[[8, 8], [12, 8], [12, 9]]]),
        dict(obstacles=[SQUARE, [[5, 5], [7, 5], [7, 7]]]),
        dict(obstacles=[[[1, 2], [3]]]),
        dict(obstacles="none"),
    ],
)
def test_invalid_documents_rejected(change):
    with pytest.raises(ScenarioError):
        scenario_from_json(json.dumps(doc(**change)))


@pytest.mark.parametrize("text", ["[]", "3", '"x"', "{}"])
def test_non_object_or_missing_fields_rejected(text):
    with pytest.raises(ScenarioError):
        scenario_from_json(text)


def test_load_missing_file(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "nope.json")


def test_clockwise_obstacles_are_reoriented():
    sc = make([SQUARE[::-1]])
    assert polygon_area(sc.obstacles[0]) == pytest.approx(4.0)


def test_polygon_helpers():
    assert polygon_area(np.array(SQUARE, float)) == 4.0
    assert polygon_area(np.array(SQUARE[::-1], float)) == -4.0
    assert is_simple(np.array(SQUARE, float))
    assert not is_simple(np.array([[0, 0], [2, 2], [2, 0], [0, 2]], float))
    assert not is_simple(np.array([[0, 0], [1, 1]], float))


# -- measure -------------------------------------------------------------------


def test_measure_empty_box():
    assert free_space_measure(make()) == pytest.approx(200 * math.pi)


def test_measure_with_square():
    assert free_space_measure(make([SQUARE])) == pytest.approx(192 * math.pi)


def test_measure_decreases_with_obstacles():
    one = free_space_measure(make([SQUARE]))
    two = free_space_measure(make([SQUARE, [[7, 1], [8, 1], [8, 2]]]))
    assert two < one < free_space_measure(make())


def test_measure_matches_monte_carlo(maze):
    rng = np.random.default_rng(2024)
    n = 10**6
    pts = rng.uniform(0, 10, size=(n, 2))
    p = maze.points_free(pts).mean()
    se = math.sqrt(p * (1 - p) / n)
    assert abs(100 * p - free_area(maze)) <= 3 * 100 * se
    assert free_space_measure(maze) == pytest.approx(2 * math.pi * free_area(maze))


# -- sampling ------------------------------------------------------------------


def test_sampling_zero():
    assert sample_free(make(), 0, 1).shape == (0, 3)
    with pytest.raises(ValueError):
        sample_free(make(), -1, 1)


def test_samples_are_free_and_in_bounds(maze):
    s = sample_free(maze, 5000, 8)
    assert maze.points_free(s).all()
    assert ((s[:, :2] >= 0) & (s[:, :2] <= 10)).all()
    assert (s[:, 2] > -math.pi).all() and (s[:, 2] <= math.pi).all()


def test_sampling_deterministic_and_prefix_stable(maze):
    a = sample_free(maze, 3000, 77)
    assert np.array_equal(a, sample_free(maze, 3000, 77))
    assert np.array_equal(a[:1000], sample_free(maze, 1000, 77))
    assert not np.array_equal(a, sample_free(maze, 3000, 78))
    assert np.array_equal(sample_free(maze, 50, [3, 4]), sample_free(maze, 50, [3, 4]))


def test_heading_mean_within_clt_bound(open_scene):
    n = 10**5
    th = sample_free(open_scene, n, 31337)[:, 2]
    assert abs(th.mean()) < 3 * math.pi / math.sqrt(3 * n)


def test_rejection_budget_exhausted():
    sc = make(
        [[[0, 0], [10, 0], [10, 9.999], [0, 9.999]]], x_init=Pose(5, 9.9995, 0), goal=GoalRegion((5, 9.9995), 0.5)
    )
    with pytest.raises(SamplingError):
        sample_free(sc, 10, 0)
    with pytest.raises(SamplingError):
        sample_free(make(), 10, 0, max_attempts=5)


# -- goal ----------------------------------------------------------------------


def test_goal_membership_is_closed():
    g = GoalRegion((1.0, 2.0), 0.5)
    assert in_goal(g, (1.0, 2.0, 3.0))
    assert in_goal(g, Pose(1.5, 2.0, -1.0))
    assert in_goal(g, (1.0, 1.5, 0.0))
    assert not in_goal(g, (1.5 + 1e-9, 2.0, 0.0))
    pts = np.array([[1.0, 2.0, 0], [1.5, 2.0, 0], [1.6, 2.0, 0]])
    assert in_goal_many(g, pts).tolist() == [True, True, False]
    with pytest.raises(ValueError):
        GoalRegion((0, 0), 0.0)


# -- collision -----------------------------------------------------------------


def test_straight_through_obstacle_collides():
    sc = make([SQUARE])
    assert not collision_free(sc, (1, 5, 0), steer((1, 5, 0), (9, 5, 0), 1.0))
    assert not edge_collision_free(sc, (1, 5, 0), (9, 5, 0))


def test_empty_scenario_is_free():
    sc = make()
    assert collision_free(sc, (1, 1, 0), steer((1, 1, 0), (8, 7, 2.0), 1.0))


def test_grazing_contact_is_collision():
    sc = make([SQUARE])
    # runs along the top edge y = 6
    assert polyline_collides(sc, np.array([[1.0, 6.0], [9.0, 6.0]]))
    # touches only the corner
    assert polyline_collides(sc, np.array([[3.0, 7.0], [4.0, 6.0], [3.0, 7.5]]))
    # passes just above
    assert not polyline_collides(sc, np.array([[1.0, 6.001], [9.0, 6.001]]))


def test_leaving_bounds_is_collision():
    sc = make()
    assert not polyline_collides(sc, np.array([[0.0, 0.0], [10.0, 10.0]]))
    assert polyline_collides(sc, np.array([[1.0, 1.0], [10.5, 1.0]]))


def test_obstacle_interior_point():
    sc = make([SQUARE])
    assert not sc.point_free(5, 5)
    assert not sc.point_free(4, 5)
    assert sc.point_free(3.99, 5)


def test_default_step_catches_fine_step_collisions(maze):
    rng = np.random.default_rng(11)
    a = sample_free(maze, 1500, 5)
    b = a + np.column_stack([rng.normal(scale=0.8, size=(1500, 2)), rng.uniform(-math.pi, math.pi, 1500)])
    fine_hits = missed = 0
    for p, q in zip(a, b):
        path = steer(p, q, maze.R)
        if not collision_free(maze, p, path, step=maze.collision_step / 10):
            fine_hits += 1
            missed += collision_free(maze, p, path)
    assert fine_hits > 100
    assert missed == 0


def test_collision_free_matches_sampling_at_random_edges(open_scene):
    rng = np.random.default_rng(0)
    for p, q in zip(random_poses(rng, 20, 1.0) + 4, random_poses(rng, 20, 1.0) + 4):
        assert edge_collision_free(open_scene, p, q)
