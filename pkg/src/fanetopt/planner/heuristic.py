"""Training-free planner: masked nearest-neighbor construction plus 2-opt.

Construction interleaves the fleet (always extend the UAV with the least
elapsed flight time) so connectivity checks see everyone's motion as it is
decided. Improvement applies intra-route 2-opt reversals and inter-route
relocations, each accepted only if it shortens the plan and the independent
validator stays clean. Failed constructions retry with randomized choices.
"""

from __future__ import annotations

import numpy as np

from ..errors import DeadEnd
from .instance import FleetState, Instance
from .masking import segment_feasible
from .validate import routes_total_length, validate_routes

_MAX_PASSES = 30
_RANDOM_POOL = 3  # randomized retries pick among this many nearest candidates


def _construct(instance: Instance, rng: np.random.Generator | None) -> list[list[int]] | None:
    state = FleetState(instance)
    for a in range(instance.num_uavs):
        state.apply(a)
    pair_range = instance.pair_range()
    open_uavs = set(range(instance.num_uavs))
    remaining = set(range(instance.num_waypoints))
    while remaining and open_uavs:
        u = min(open_uavs, key=lambda a: (state.elapsed(a), a))
        here = state.end_position(u)
        order = sorted(remaining,
                       key=lambda w: (np.linalg.norm(instance.wp_xyz[w] - here), w))
        feasible = []
        for w in order:
            if segment_feasible(state, instance.wp_xyz[w], pair_range, uav=u):
                feasible.append(w)
                if rng is None or len(feasible) >= _RANDOM_POOL:
                    break
        if not feasible:
            open_uavs.discard(u)
            continue
        pick = feasible[0] if rng is None else feasible[int(rng.integers(len(feasible)))]
        state.extend_uav(u, pick)
        remaining.discard(pick)
    if remaining:
        return None
    return [list(r) for r in state.routes]


def _improve(instance: Instance, routes: list[list[int]]) -> list[list[int]]:
    best = [list(r) for r in routes]
    best_len = routes_total_length(instance, best)
    for _ in range(_MAX_PASSES):
        improved = False
        # intra-route 2-opt reversals
        for u, route in enumerate(best):
            n = len(route)
            for i in range(n - 1):
                for j in range(i + 2, n + 1):
                    cand = [list(r) for r in best]
                    cand[u] = route[:i] + route[i:j][::-1] + route[j:]
                    cand_len = routes_total_length(instance, cand)
                    if cand_len < best_len - 1e-9 and not validate_routes(instance, cand):
                        best, best_len = cand, cand_len
                        improved = True
                        break
                if improved:
                    break
            if improved:
                break
        if improved:
            continue
        # inter-route relocation of single waypoints
        for u, route in enumerate(best):
            for i, wp in enumerate(route):
                for v in range(instance.num_uavs):
                    target_len = len(best[v]) + (0 if v != u else -1)
                    for j in range(target_len + 1):
                        if v == u and j == i:
                            continue
                        cand = [list(r) for r in best]
                        cand[u].pop(i)
                        cand[v].insert(j, wp)
                        cand_len = routes_total_length(instance, cand)
                        if cand_len < best_len - 1e-9 and not validate_routes(instance, cand):
                            best, best_len = cand, cand_len
                            improved = True
                            break
                    if improved:
                        break
                if improved:
                    break
            if improved:
                break
        if not improved:
            break
    return best


def heuristic_plan(instance: Instance, seed: int = 0,
                   max_retries: int = 20) -> list[list[int]]:
    """Feasible routes (validator-clean) or DeadEnd with the best partial."""
    rng = np.random.default_rng(seed)
    partial = None
    for attempt in range(max_retries + 1):
        routes = _construct(instance, rng if attempt > 0 else None)
        if routes is None:
            continue
        partial = routes
        routes = _improve(instance, routes)
        if not validate_routes(instance, routes):
            return routes
    raise DeadEnd("heuristic construction could not complete a feasible plan",
                  partial=partial)
