"""Feasibility masking for sequential route construction.

A waypoint is masked when visiting it next would blow the current UAV's
time budget, drag any UAV below the max-power neighbor floor somewhere
along the straight segment, or bring two UAVs inside the anti-collision
distance. Segments are checked at both endpoints plus four interior
sub-samples. Unused start tokens are always selectable (closing a route
moves nobody).
"""

from __future__ import annotations

import numpy as np

from .instance import FleetState, Instance

SEGMENT_SAMPLES = 6  # endpoints + 4 interior points


def neighbor_counts(positions: np.ndarray, pair_range: np.ndarray) -> np.ndarray:
    """Max-power two-sided neighbor count per UAV (node degrees)."""
    d = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)
    adj = d <= pair_range
    np.fill_diagonal(adj, False)
    return adj.sum(axis=1)


def fleet_constraints_ok(positions: np.ndarray, instance: Instance,
                         pair_range: np.ndarray) -> bool:
    a = instance.num_uavs
    if a < 2:
        return True
    d = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)
    if instance.d_min > 0:
        off = d.copy()
        np.fill_diagonal(off, np.inf)
        if off.min() < instance.d_min:
            return False
    if instance.k_min >= 1:
        adj = d <= pair_range
        np.fill_diagonal(adj, False)
        if adj.sum(axis=1).min() < instance.k_min:
            return False
    return True


def segment_feasible(state: FleetState, target_xyz: np.ndarray,
                     pair_range: np.ndarray, uav: int | None = None) -> bool:
    """Check a UAV's straight segment to ``target_xyz`` (default: current)."""
    inst = state.instance
    u = state.current if uav is None else uav
    p0 = state.end_position(u)
    t0 = state.elapsed(u)
    seg_len = float(np.linalg.norm(target_xyz - p0))
    t1 = t0 + seg_len / inst.speed[u]
    if t1 > inst.t_max[u] * (1.0 + 1e-9):
        return False
    if inst.num_uavs < 2:
        return True
    for j in range(SEGMENT_SAMPLES):
        frac = j / (SEGMENT_SAMPLES - 1)
        t = t0 + frac * (t1 - t0)
        here = p0 + frac * (target_xyz - p0)
        fleet = state.positions_at(t, override_uav=u, override_xyz=here)
        if not fleet_constraints_ok(fleet, inst, pair_range):
            return False
    return True


def feasibility_mask(state: FleetState, pair_range: np.ndarray | None = None) -> np.ndarray:
    """Boolean mask over tokens; True means the token must not be chosen."""
    inst = state.instance
    if pair_range is None:
        pair_range = inst.pair_range()
    a = inst.num_uavs
    mask = state.allocated.copy()
    if state.current is None:
        mask[a:] = True  # a route must begin with a start token
        return mask
    for wp in range(inst.num_waypoints):
        token = a + wp
        if mask[token]:
            continue
        if not segment_feasible(state, inst.wp_xyz[wp], pair_range):
            mask[token] = True
    return mask
