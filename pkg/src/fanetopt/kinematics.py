"""Route-to-position kinematics and plan feasibility checks.

UAVs fly straight constant-speed segments between waypoints, all departing
at t = 0, and hover at their final waypoint once the route is exhausted so
links persist through the last slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TimeBudgetExceeded
from .scenario import Scenario

COLLISION_SUBSAMPLES = 4  # interior sub-samples per slot for anti-collision


def build_distance_matrix(points: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances; symmetric with a zero diagonal."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise ValueError(f"need at least 2 points, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


@dataclass(frozen=True)
class TrajectorySet:
    """Ordered waypoint routes per UAV, using 1-based node ids.

    ``routes[a]`` starts with a start-point id (1..S) followed by waypoint
    ids (S+1..S+W). Visit-once violations are not rejected here; they are
    surfaced by :func:`validate_plan`.
    """

    routes: tuple[tuple[int, ...], ...]
    num_starts: int
    num_waypoints: int

    def __post_init__(self):
        object.__setattr__(self, "routes", tuple(tuple(r) for r in self.routes))
        n = self.num_starts + self.num_waypoints
        for a, route in enumerate(self.routes, start=1):
            if len(route) < 1:
                raise ValueError(f"route {a} is empty (needs at least a start id)")
            if not (1 <= route[0] <= self.num_starts):
                raise ValueError(f"route {a} must begin at a start id in 1..{self.num_starts}")
            for node in route[1:]:
                if not (self.num_starts < node <= n):
                    raise ValueError(f"route {a}: id {node} is not a waypoint id")

    @property
    def num_uavs(self) -> int:
        return len(self.routes)

    def visit_matrix(self) -> np.ndarray:
        """Edge-visit tensor E of shape (S+W, S+W, A)."""
        n = self.num_starts + self.num_waypoints
        e = np.zeros((n, n, self.num_uavs), dtype=np.int8)
        for a, route in enumerate(self.routes):
            for i, j in zip(route[:-1], route[1:]):
                e[i - 1, j - 1, a] = 1
        return e

    def total_length(self, points: np.ndarray) -> float:
        dist = build_distance_matrix(points)
        e = self.visit_matrix()
        return float(np.sum(e * dist[:, :, None]))


@dataclass(frozen=True)
class PositionSeries:
    """UAV positions at slot boundaries: shape (A, N+1, 3)."""

    positions: np.ndarray
    slot_duration_s: float

    def __post_init__(self):
        arr = np.array(self.positions, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "positions", arr)

    @property
    def num_uavs(self) -> int:
        return self.positions.shape[0]

    @property
    def num_slots(self) -> int:
        """N: the series holds N+1 slot boundaries."""
        return self.positions.shape[1] - 1


class Polyline:
    """Arc-length parameterized polyline traversed at constant speed."""

    def __init__(self, points: np.ndarray, speed: float):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.speed = float(speed)
        seg = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        self.cumlen = np.concatenate([[0.0], np.cumsum(seg)])

    @property
    def length(self) -> float:
        return float(self.cumlen[-1])

    @property
    def duration(self) -> float:
        return self.length / self.speed

    def position_at(self, t) -> np.ndarray:
        """Position(s) at time(s) ``t``; clamps to the endpoints."""
        s = np.clip(np.asarray(t, dtype=float) * self.speed, 0.0, self.length)
        coords = [np.interp(s, self.cumlen, self.points[:, k]) for k in range(3)]
        out = np.stack(coords, axis=-1)
        return out


def route_polyline(route: tuple[int, ...], points: np.ndarray, speed: float) -> Polyline:
    coords = points[np.array(route, dtype=int) - 1]
    return Polyline(coords, speed)


def positions_over_slots(traj: TrajectorySet, scenario: Scenario) -> PositionSeries:
    """Sample each UAV's polyline at the N+1 slot boundaries.

    Raises TimeBudgetExceeded if a route cannot be completed within the
    UAV's flight-time budget.
    """
    points = scenario.points()
    dt = scenario.slot_duration_s
    n = scenario.n_slots
    times = np.arange(n + 1) * dt
    positions = np.empty((scenario.num_uavs, n + 1, 3))
    for a, (route, uav) in enumerate(zip(traj.routes, scenario.uavs)):
        line = route_polyline(route, points, uav.speed_mps)
        if line.duration > uav.t_max_s * (1.0 + 1e-9):
            raise TimeBudgetExceeded(uav.id, line.duration, uav.t_max_s)
        positions[a] = line.position_at(times)
    return PositionSeries(positions=positions, slot_duration_s=dt)


def positions_to_csv(pos: PositionSeries, path) -> None:
    """Export slot-boundary positions as (slot, uav, x, y, z) rows."""
    import csv
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["slot", "uav", "x", "y", "z"])
        for n in range(pos.num_slots + 1):
            for a in range(pos.num_uavs):
                x, y, z = pos.positions[a, n]
                writer.writerow([n, a + 1, repr(float(x)), repr(float(y)),
                                 repr(float(z))])


@dataclass
class PlanReport:
    """Constraint check outcome; empty lists mean a feasible plan."""

    visit_violations: list[str] = field(default_factory=list)
    collision_violations: list[str] = field(default_factory=list)
    length_violations: list[str] = field(default_factory=list)
    time_violations: list[str] = field(default_factory=list)

    @property
    def is_feasible(self) -> bool:
        return not (self.visit_violations or self.collision_violations
                    or self.length_violations or self.time_violations)

    def all_violations(self) -> list[str]:
        return (self.visit_violations + self.collision_violations
                + self.length_violations + self.time_violations)


def validate_plan(traj: TrajectorySet, pos: PositionSeries, scenario: Scenario,
                  subsamples: int = COLLISION_SUBSAMPLES) -> PlanReport:
    """Check visit-once, anti-collision, total length and time budgets.

    Anti-collision is evaluated at slot boundaries plus ``subsamples``
    uniformly spaced interior points per slot, on fresh polylines (not on
    ``pos``) so the check does not trust slot-sampled data.
    """
    report = PlanReport()
    points = scenario.points()
    s, w = scenario.num_starts, scenario.num_waypoints

    counts = np.zeros(w, dtype=int)
    for route in traj.routes:
        for node in route[1:]:
            counts[node - s - 1] += 1
    for j in np.nonzero(counts != 1)[0]:
        report.visit_violations.append(
            f"waypoint {s + j + 1} visited {counts[j]} times (must be exactly once)")

    lines = [route_polyline(route, points, uav.speed_mps)
             for route, uav in zip(traj.routes, scenario.uavs)]
    for uav, line in zip(scenario.uavs, lines):
        if line.duration > uav.t_max_s * (1.0 + 1e-9):
            report.time_violations.append(
                f"uav {uav.id}: route duration {line.duration:.3f} s > t_max {uav.t_max_s:.3f} s")

    total = sum(line.length for line in lines)
    if total > scenario.l_max_m * (1.0 + 1e-9):
        report.length_violations.append(
            f"total route length {total:.3f} m > l_max {scenario.l_max_m:.3f} m")

    dt = pos.slot_duration_s
    n = pos.num_slots
    steps = n * (subsamples + 1) + 1
    times = np.arange(steps) * (dt / (subsamples + 1))
    all_pos = np.stack([line.position_at(times) for line in lines])  # (A, T, 3)
    a_count = len(lines)
    if scenario.d_min_m > 0:
        for i in range(a_count):
            for j in range(i + 1, a_count):
                d = np.linalg.norm(all_pos[i] - all_pos[j], axis=1)
                bad = np.nonzero(d < scenario.d_min_m)[0]
                if bad.size:
                    k = int(bad[0])
                    slot = k // (subsamples + 1)
                    report.collision_violations.append(
                        f"uavs {i + 1} and {j + 1} within d_min at slot {slot} "
                        f"(t={times[k]:.3f} s, d={d[k]:.3f} m)")
    return report
