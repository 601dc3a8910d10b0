"""Distance matrices, slot-sampled kinematics and plan validation."""

import math

import numpy as np
import pytest

from fanetopt.errors import TimeBudgetExceeded
from fanetopt.kinematics import (PositionSeries, TrajectorySet, build_distance_matrix,
                                 positions_over_slots, route_polyline, validate_plan)

from conftest import make_scenario


def test_distance_matrix_3_4_5():
    d = build_distance_matrix(np.array([[0.0, 0.0, 0.0], [3.0, 4.0, 0.0]]))
    assert d[0, 1] == pytest.approx(5.0)
    assert d[1, 0] == pytest.approx(5.0)
    assert d[0, 0] == 0.0 and d[1, 1] == 0.0


def test_distance_matrix_matches_independent_recomputation(rng):
    pts = rng.uniform(-100.0, 100.0, size=(10, 3))
    d = build_distance_matrix(pts)
    for i in range(10):
        for j in range(10):
            assert d[i, j] == pytest.approx(math.dist(pts[i], pts[j]), abs=1e-9)


def _line_scenario(n_slots=20, t_max=20.0):
    # start 1 at origin, waypoint 3 = (100,0,50): a 100 m straight route
    return make_scenario(
        n_uavs=2, k_min=1, delta=2, n_slots=n_slots, t_max_s=t_max,
        speed_mps=10.0, d_min_m=0.0,
        start_points=[[0.0, 0.0, 50.0], [5.0, 5.0, 50.0]],
        waypoints=[[100.0, 0.0, 50.0]],
    )


def test_constant_speed_position():
    sc = _line_scenario()
    traj = TrajectorySet(routes=((1, 3), (2,)), num_starts=2, num_waypoints=1)
    pos = positions_over_slots(traj, sc)
    assert pos.slot_duration_s == pytest.approx(1.0)
    assert np.allclose(pos.positions[0, 5], [50.0, 0.0, 50.0])
    assert np.allclose(pos.positions[1, 5], [5.0, 5.0, 50.0])  # hovering


def test_hover_after_route_completion():
    sc = _line_scenario()
    traj = TrajectorySet(routes=((1, 3), (2,)), num_starts=2, num_waypoints=1)
    pos = positions_over_slots(traj, sc)
    for n in range(10, 21):
        assert np.allclose(pos.positions[0, n], [100.0, 0.0, 50.0])


def test_time_budget_exceeded():
    sc = _line_scenario(t_max=9.0)  # 100 m at 10 m/s needs 10 s
    traj = TrajectorySet(routes=((1, 3), (2,)), num_starts=2, num_waypoints=1)
    with pytest.raises(TimeBudgetExceeded) as ei:
        positions_over_slots(traj, sc)
    assert ei.value.uav == 1


def _arc_length_oracle(points, speed, t):
    """Independent arc-length parameterization via explicit segment walk."""
    seg_vec = np.diff(points, axis=0)
    seg_len = np.linalg.norm(seg_vec, axis=1)
    s = min(speed * t, seg_len.sum())
    for p0, vec, ln in zip(points[:-1], seg_vec, seg_len):
        if s <= ln or ln == seg_len.sum():
            return p0 + vec * (s / ln if ln > 0 else 0.0)
        s -= ln
    return points[-1]


def test_polyline_matches_arc_length_oracle(rng):
    wps = rng.uniform(0.0, 100.0, size=(3, 3))
    sc = make_scenario(
        n_uavs=2, k_min=1, n_slots=17, t_max_s=100.0, speed_mps=7.0, d_min_m=0.0,
        start_points=[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]],
        waypoints=wps.tolist(),
    )
    traj = TrajectorySet(routes=((1, 3, 4, 5), (2,)), num_starts=2, num_waypoints=3)
    pos = positions_over_slots(traj, sc)
    pts = np.vstack([[0.0, 0.0, 0.0], wps])
    for n in range(18):
        t = n * sc.slot_duration_s
        expect = _arc_length_oracle(pts, 7.0, t)
        assert np.allclose(pos.positions[0, n], expect, atol=1e-9)


def test_piecewise_linearity_midpoint_on_segment():
    sc = _line_scenario()
    traj = TrajectorySet(routes=((1, 3), (2,)), num_starts=2, num_waypoints=1)
    pos = positions_over_slots(traj, sc)
    for n in range(0, 9):
        mid = 0.5 * (pos.positions[0, n] + pos.positions[0, n + 1])
        line = route_polyline((1, 3), sc.points(), 10.0)
        t_mid = (n + 0.5) * sc.slot_duration_s
        assert np.allclose(mid, line.position_at(t_mid), atol=1e-9)


def test_visit_once_violation_reported():
    sc = make_scenario(
        n_uavs=2, k_min=1, n_slots=5, d_min_m=0.0,
        start_points=[[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]],
        waypoints=[[0.0, 10.0, 0.0], [10.0, 10.0, 0.0]],
    )
    traj = TrajectorySet(routes=((1, 3), (2, 3)), num_starts=2, num_waypoints=2)
    pos = positions_over_slots(traj, sc)
    report = validate_plan(traj, pos, sc)
    assert any("waypoint 3 visited 2" in v for v in report.visit_violations)
    assert any("waypoint 4 visited 0" in v for v in report.visit_violations)
    assert not report.is_feasible


def test_collision_detected_by_brute_force_comparison():
    # two UAVs crossing through the same midpoint at the same time
    sc = make_scenario(
        n_uavs=2, k_min=1, n_slots=20, t_max_s=20.0, speed_mps=10.0, d_min_m=5.0,
        start_points=[[0.0, 0.0, 0.0], [100.0, 0.0, 0.0]],
        waypoints=[[100.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
    )
    traj = TrajectorySet(routes=((1, 3), (2, 4)), num_starts=2, num_waypoints=2)
    pos = positions_over_slots(traj, sc)
    report = validate_plan(traj, pos, sc)
    assert report.collision_violations
    # approach at 20 m/s: within d_min=5 m from t=4.75 s, i.e. inside slot 4
    assert "slot 4" in report.collision_violations[0]

    # brute-force oracle over a dense time grid agrees a conflict exists
    pts = sc.points()
    lines = [route_polyline(r, pts, 10.0) for r in traj.routes]
    times = np.linspace(0.0, 20.0, 2001)
    d = np.linalg.norm(lines[0].position_at(times) - lines[1].position_at(times), axis=1)
    assert d.min() < 5.0


def test_feasible_plan_empty_report():
    sc = make_scenario(
        n_uavs=2, k_min=1, n_slots=10, t_max_s=30.0, d_min_m=1.0,
        start_points=[[0.0, 0.0, 0.0], [50.0, 0.0, 0.0]],
        waypoints=[[0.0, 50.0, 0.0], [50.0, 50.0, 0.0]],
    )
    traj = TrajectorySet(routes=((1, 3), (2, 4)), num_starts=2, num_waypoints=2)
    pos = positions_over_slots(traj, sc)
    report = validate_plan(traj, pos, sc)
    assert report.is_feasible
    assert report.all_violations() == []


def test_total_length_two_computation_paths_agree(rng):
    wps = rng.uniform(0.0, 200.0, size=(6, 3))
    sc = make_scenario(
        n_uavs=2, k_min=1, n_slots=5, t_max_s=1e4, d_min_m=0.0,
        start_points=[[0.0, 0.0, 0.0], [200.0, 200.0, 0.0]],
        waypoints=wps.tolist(),
    )
    traj = TrajectorySet(routes=((1, 3, 5, 7), (2, 4, 6, 8)),
                         num_starts=2, num_waypoints=6)
    via_matrix = traj.total_length(sc.points())
    via_polylines = sum(route_polyline(r, sc.points(), 1.0).length for r in traj.routes)
    assert via_matrix == pytest.approx(via_polylines, rel=1e-9)


def test_visit_once_column_sums():
    sc = make_scenario(
        n_uavs=2, k_min=1, n_slots=5, t_max_s=1e4, d_min_m=0.0,
        start_points=[[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]],
        waypoints=[[0.0, 10.0, 0.0], [5.0, 10.0, 0.0], [10.0, 10.0, 0.0]],
    )
    traj = TrajectorySet(routes=((1, 3, 4), (2, 5)), num_starts=2, num_waypoints=3)
    e = traj.visit_matrix()
    col_sums = e.sum(axis=(0, 2))
    assert np.all(col_sums[2:] == 1)


def test_length_budget_violation():
    sc = make_scenario(
        n_uavs=2, k_min=1, n_slots=5, t_max_s=1e4, d_min_m=0.0, l_max_m=10.0,
        start_points=[[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]],
        waypoints=[[0.0, 100.0, 0.0]],
    )
    traj = TrajectorySet(routes=((1, 3), (2,)), num_starts=2, num_waypoints=1)
    pos = positions_over_slots(traj, sc)
    report = validate_plan(traj, pos, sc)
    assert report.length_violations
