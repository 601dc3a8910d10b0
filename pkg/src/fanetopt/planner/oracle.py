"""Exact search over all partitions and orderings, for verification only."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InstanceTooLarge
from .instance import FleetState, Instance
from .masking import feasibility_mask
from .validate import validate_routes

MAX_WAYPOINTS = 9
MAX_UAVS = 2


@dataclass
class OracleResult:
    routes: list[list[int]] | None
    length: float
    feasible: bool


def exhaustive_oracle(instance: Instance) -> OracleResult:
    """Minimum-length mask-consistent plan by depth-first enumeration.

    Branch-and-bound: a partial plan is cut when its length plus the sum of
    each unvisited waypoint's cheapest possible incoming edge already meets
    the incumbent. Completions must also pass the independent validator.
    """
    if instance.num_waypoints > MAX_WAYPOINTS or instance.num_uavs > MAX_UAVS:
        raise InstanceTooLarge(
            f"oracle guard: W={instance.num_waypoints} > {MAX_WAYPOINTS} "
            f"or A={instance.num_uavs} > {MAX_UAVS}")

    xyz = instance.node_xyz()
    dmat = np.linalg.norm(xyz[:, None, :] - xyz[None, :, :], axis=-1)
    np.fill_diagonal(dmat, np.inf)
    min_in = dmat[:, instance.num_uavs:].min(axis=0)  # per waypoint

    pair_range = instance.pair_range()
    state = FleetState(instance)
    best: dict = {"length": np.inf, "routes": None}

    def remaining_bound() -> float:
        unvisited = ~state.allocated[instance.num_uavs:]
        return float(min_in[unvisited].sum())

    def dfs() -> None:
        if state.n_chosen == instance.num_nodes:
            length = state.total_length()
            if length < best["length"] and not validate_routes(
                    instance, [list(r) for r in state.routes]):
                best["length"] = length
                best["routes"] = [list(r) for r in state.routes]
            return
        if state.total_length() + remaining_bound() >= best["length"]:
            return
        mask = feasibility_mask(state, pair_range)
        for token in np.nonzero(~mask)[0]:
            state.apply(int(token))
            dfs()
            state.revert()

    dfs()
    if best["routes"] is None:
        return OracleResult(routes=None, length=np.inf, feasible=False)
    return OracleResult(routes=best["routes"], length=best["length"], feasible=True)
