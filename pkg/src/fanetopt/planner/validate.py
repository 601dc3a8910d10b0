"""Independent plan validator.

Re-derives every constraint from the final routes alone (never from the
construction bookkeeping): visit-once, per-UAV time budgets, anti-collision
and the max-power neighbor floor, sampled on the union of all segment
endpoints plus four interior points per segment.
"""

from __future__ import annotations

import numpy as np

from ..kinematics import Polyline
from .instance import Instance

_SEG_INTERIOR = 4


def _polylines(instance: Instance, routes: list[list[int]]) -> list[Polyline]:
    lines = []
    for u, route in enumerate(routes):
        coords = np.vstack([instance.start_xyz[u][None, :],
                            instance.wp_xyz[route]]) if route else \
            instance.start_xyz[u][None, :]
        lines.append(Polyline(coords, instance.speed[u]))
    return lines


def _sample_times(lines: list[Polyline]) -> np.ndarray:
    times = {0.0}
    horizon = max(line.duration for line in lines)
    times.add(horizon)
    for line in lines:
        seg_times = line.cumlen / line.speed
        for t0, t1 in zip(seg_times[:-1], seg_times[1:]):
            for j in range(_SEG_INTERIOR + 2):
                times.add(t0 + (t1 - t0) * j / (_SEG_INTERIOR + 1))
    return np.array(sorted(times))


def validate_routes(instance: Instance, routes: list[list[int]]) -> list[str]:
    """Return violation descriptions; an empty list means a feasible plan."""
    violations: list[str] = []
    if len(routes) != instance.num_uavs:
        return [f"expected {instance.num_uavs} routes, got {len(routes)}"]

    counts = np.zeros(instance.num_waypoints, dtype=int)
    for route in routes:
        for wp in route:
            counts[wp] += 1
    for wp in np.nonzero(counts != 1)[0]:
        violations.append(f"waypoint {wp} visited {counts[wp]} times")

    lines = _polylines(instance, routes)
    for u, line in enumerate(lines):
        if line.duration > instance.t_max[u] * (1.0 + 1e-9):
            violations.append(
                f"uav {u} needs {line.duration:.3f} s > t_max {instance.t_max[u]:.3f} s")

    if instance.num_uavs >= 2:
        times = _sample_times(lines)
        fleet = np.stack([line.position_at(times) for line in lines])  # (A, T, 3)
        diff = fleet[:, None, :, :] - fleet[None, :, :, :]
        d = np.linalg.norm(diff, axis=-1)  # (A, A, T)
        a = instance.num_uavs
        eye = np.eye(a, dtype=bool)
        if instance.d_min > 0:
            off = np.where(eye[:, :, None], np.inf, d)
            bad = np.argwhere(off.min(axis=(0, 1)) < instance.d_min)
            if bad.size:
                t = times[bad[0, 0]]
                violations.append(f"anti-collision breach at t={t:.3f} s")
        if instance.k_min >= 1:
            adj = d <= instance.pair_range()[:, :, None]
            adj &= ~eye[:, :, None]
            k = adj.sum(axis=1)  # (A, T)
            low = np.argwhere(k.min(axis=0) < instance.k_min)
            if low.size:
                t = times[low[0, 0]]
                violations.append(
                    f"max-power neighbor count below k_min={instance.k_min} at t={t:.3f} s")
    return violations


def routes_total_length(instance: Instance, routes: list[list[int]]) -> float:
    return float(sum(line.length for line in _polylines(instance, routes)))
