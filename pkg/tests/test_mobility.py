import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from catsim.indicators import PlanarPoint
from catsim.mobility import (MatchError, MobilityFix, Trajectory, build_mean_trajectory, extrapolate_gps,
                             match_trip, predict_along_trajectory, read_trajectory, resample,
                             write_trajectory)

LINE = Trajectory([(0, 0), (100, 0)])
CORNER = Trajectory([(0, 0), (100, 0), (100, 100)])


def test_extrapolation_examples():
    fix = MobilityFix(PlanarPoint(0, 0), 0.0, 10.0)
    assert extrapolate_gps(fix, 0.0) == fix.position
    assert extrapolate_gps(fix, 10.0) == PlanarPoint(100.0, 0.0)
    p = extrapolate_gps(MobilityFix(PlanarPoint(0, 0), 90.0, 10.0), 10.0)
    assert p.x == pytest.approx(0.0, abs=1e-12) and p.y == pytest.approx(100.0)


@given(st.floats(0, 359.99), st.floats(0, 60), st.floats(0, 120))
def test_extrapolation_distance(heading, v, tau):
    fix = MobilityFix(PlanarPoint(5, -3), heading, v)
    assert fix.position.distance_to(extrapolate_gps(fix, tau)) == pytest.approx(v * tau, abs=1e-9)


def test_fix_validation():
    with pytest.raises(ValueError):
        MobilityFix(PlanarPoint(0, 0), 360.0, 1.0)
    with pytest.raises(ValueError):
        MobilityFix(PlanarPoint(0, 0), 0.0, -1.0)


def test_trajectory_examples():
    assert predict_along_trajectory(LINE, (0, 0), 10, 5).position == PlanarPoint(50.0, 0.0)
    corner = predict_along_trajectory(CORNER, (0, 0), 10, 15)
    assert corner.position == PlanarPoint(100.0, 50.0)
    assert corner.arc_length == 150.0 and not corner.overshoot


def test_zero_horizon_is_projection():
    pred = predict_along_trajectory(CORNER, (40, 3), 12.0, 0.0)
    assert pred.position == PlanarPoint(40.0, 0.0)


def test_overshoot_clamps_to_end():
    pred = predict_along_trajectory(LINE, (90, 0), 10, 5)
    assert pred.position == PlanarPoint(100.0, 0.0) and pred.overshoot


def test_snap_radius():
    with pytest.raises(MatchError):
        predict_along_trajectory(LINE, (50, 80), 10, 1, snap_radius=50)
    assert predict_along_trajectory(LINE, (50, 40), 10, 1, snap_radius=50).position == PlanarPoint(60.0, 0.0)


def test_point_at_interior_uses_arc_offset():
    p, over = CORNER.point_at(130.0)
    assert p == PlanarPoint(100.0, 30.0) and not over


def polylines():
    # x strictly increasing keeps the polyline free of self-intersections
    step = st.tuples(st.floats(1.0, 80.0), st.floats(-60.0, 60.0))
    return st.lists(step, min_size=1, max_size=8).map(
        lambda steps: np.vstack([[0.0, 0.0], np.cumsum(np.array(steps), axis=0)]))


@given(polylines(), st.floats(0, 1), st.floats(0, 30), st.floats(0, 20))
def test_matches_dense_walker(points, frac, v, tau):
    traj = Trajectory(points)
    start, _ = traj.point_at(frac * traj.length)
    pred = predict_along_trajectory(traj, start, v, tau).position
    ref = oracles.walk(points, tuple(start), v, tau)
    assert math.hypot(pred.x - ref[0], pred.y - ref[1]) <= 0.01


@given(polylines(), st.floats(0, 1), st.floats(0, 30), st.floats(0, 10), st.floats(0, 10))
def test_monotone_in_tau(points, frac, v, t1, t2):
    traj = Trajectory(points)
    start, _ = traj.point_at(frac * traj.length)
    a = predict_along_trajectory(traj, start, v, min(t1, t2)).arc_length
    b = predict_along_trajectory(traj, start, v, max(t1, t2)).arc_length
    assert a <= b + 1e-9


def test_trajectory_validation():
    with pytest.raises(ValueError):
        Trajectory([(0, 0)])
    with pytest.raises(ValueError):
        Trajectory([(0, 0), (0, 0)])
    with pytest.raises(AttributeError):
        LINE.waypoints = None
    with pytest.raises(ValueError):
        LINE.waypoints[0, 0] = 1.0


def test_mean_trajectory_examples():
    a = Trajectory([(0, 0), (100, 0)])
    b = Trajectory([(0, 2), (100, 2)])
    mean = build_mean_trajectory([a, b])
    assert np.allclose(mean.waypoints[:, 1], 1.0)
    assert mean.waypoints[0, 0] == 0.0 and mean.waypoints[-1, 0] == 100.0
    same = build_mean_trajectory([CORNER, CORNER])
    single = build_mean_trajectory([CORNER])
    assert np.array_equal(same.waypoints, single.waypoints)
    assert np.allclose(single.waypoints, resample(CORNER, len(single)))


@given(st.permutations([0, 1, 2, 3]))
def test_mean_trajectory_order_invariant(order):
    trips = [Trajectory([(0, k), (50, 2 * k + 1), (100, k)]) for k in (0.3, 1.7, 2.9, 4.1)]
    ref = build_mean_trajectory(trips)
    assert np.array_equal(build_mean_trajectory([trips[i] for i in order]).waypoints, ref.waypoints)


def test_match_trip():
    a = Trajectory([(0, 0), (100, 0)])
    b = Trajectory([(0, 0), (0, 100)])
    assert match_trip([a], MobilityFix(PlanarPoint(50, 50), 0, 1)) is a
    assert match_trip([a, b], MobilityFix(PlanarPoint(50, 1), 0, 1)) is a
    # 5 m from both; heading 90 lines up with b
    assert match_trip([a, b], MobilityFix(PlanarPoint(5, 5), 90.0, 1)) is b
    with pytest.raises(ValueError):
        match_trip([], MobilityFix(PlanarPoint(0, 0), 0, 1))


def test_trajectory_file_roundtrip(tmp_path):
    path = tmp_path / "route.csv"
    write_trajectory(path, CORNER)
    assert np.array_equal(read_trajectory(path).waypoints, CORNER.waypoints)
    assert "np.float64" not in path.read_text()
