"""End-to-end mission pipeline, comparison baselines and network metrics.

The pipeline runs plan -> positions -> topology -> power -> metrics. Two
baselines share the planner output so comparisons isolate the topology and
power layers: MTP transmits at maximum power until the communication energy
runs out (links vanish afterwards), and a simplified local-MST baseline
keeps an edge only when both endpoints keep it in their neighborhood MST,
with powers just sustaining each node's tree edges.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DeadEnd, FanetError, InfeasibleTopology, ZeroDistance
from .kinematics import (PositionSeries, TrajectorySet, positions_over_slots,
                         validate_plan)
from .planner import Instance, decode_rollout, exhaustive_oracle, heuristic_plan
from .planner.checkpoint import load_checkpoint
from .radio import RadioParams, link_throughput
from .scenario import Scenario
from .topology import (TopologySeries, build_slot_topology_raw, connected_components,
                       largest_component_size, optimize_series)
from .power import solve_all

DEFAULT_N_DC = 45  # failure-injection slot used throughout the experiments


# Baseline topology/power series ---------------------------------------------


def _max_power_adjacency(positions: np.ndarray, caps: np.ndarray,
                         radio: RadioParams, alive: np.ndarray | None = None,
                         ) -> np.ndarray:
    """Two-sided reachability when everyone transmits at maximum power."""
    n = len(positions)
    d = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)
    reach = np.sqrt(caps * radio.mu_f / radio.sensitivity_w)
    pair = np.minimum(reach[:, None], reach[None, :])
    adj = (d <= pair).astype(np.int8)
    if alive is not None:
        adj &= alive.astype(np.int8)[:, None]
        adj &= alive.astype(np.int8)[None, :]
    np.fill_diagonal(adj, 1)
    return adj


def mtp_alive_mask(scenario: Scenario, n_slots: int, dt: float) -> np.ndarray:
    """Per-UAV, per-slot transmit capability under the energy ledger."""
    caps = scenario.p_max_w()
    e_max = scenario.e_max_j()
    alive = np.zeros((scenario.num_uavs, n_slots + 1), dtype=bool)
    spent = np.zeros(scenario.num_uavs)
    depleted = np.zeros(scenario.num_uavs, dtype=bool)
    for n in range(n_slots + 1):
        affordable = spent + dt * caps <= e_max * (1.0 + 1e-12)
        now = affordable & ~depleted
        depleted |= ~now
        spent += np.where(now, dt * caps, 0.0)
        alive[:, n] = now
    return alive


def mtp_series(pos: PositionSeries, scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Max-transmit-power baseline: (matrices, powers)."""
    n_slots = pos.num_slots
    caps = scenario.p_max_w()
    alive = mtp_alive_mask(scenario, n_slots, pos.slot_duration_s)
    a = scenario.num_uavs
    matrices = np.empty((n_slots + 1, a, a), dtype=np.int8)
    for n in range(n_slots + 1):
        matrices[n] = _max_power_adjacency(pos.positions[:, n, :], caps,
                                           scenario.radio, alive[:, n])
    powers = np.where(alive, caps[:, None], 0.0)
    return matrices, powers


def _local_mst_neighbors(dist: np.ndarray, visible: np.ndarray, u: int) -> set[int]:
    """Neighbors of ``u`` in the MST of its one-hop induced subgraph (Prim)."""
    nodes = [u] + sorted(int(v) for v in np.nonzero(visible[u])[0])
    in_tree = {u}
    parent: dict[int, int] = {}
    while len(in_tree) < len(nodes):
        best = None
        for i in sorted(in_tree):
            for j in nodes:
                if j in in_tree or not visible[i, j]:
                    continue
                cand = ((dist[i, j], min(i, j), max(i, j)), i, j)
                if best is None or cand[0] < best[0]:
                    best = cand
        if best is None:
            break  # induced subgraph disconnected: keep u's component only
        _, i, j = best
        in_tree.add(j)
        parent[j] = i
    nbrs = set()
    for child, par in parent.items():
        if par == u:
            nbrs.add(child)
        if child == u:
            nbrs.add(par)
    return nbrs


def lmst_slot(positions: np.ndarray, caps: np.ndarray, radio: RadioParams,
              ) -> tuple[np.ndarray, np.ndarray]:
    """Simplified local-MST topology and the minimum sustaining powers."""
    n = len(positions)
    d = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)
    visible = _max_power_adjacency(positions, caps, radio).astype(bool)
    np.fill_diagonal(visible, False)
    keep_sets = [_local_mst_neighbors(d, visible, u) for u in range(n)]
    adj = np.zeros((n, n), dtype=np.int8)
    for u in range(n):
        for v in keep_sets[u]:
            if u in keep_sets[v]:
                adj[u, v] = adj[v, u] = 1
    powers = np.zeros(n)
    for u in range(n):
        kept = np.nonzero(adj[u])[0]
        kept = kept[kept != u]
        if kept.size:
            powers[u] = radio.sensitivity_w * d[u, kept].max() ** 2 / radio.mu_f
    np.fill_diagonal(adj, 1)
    return adj, powers


def lmst_series(pos: PositionSeries, scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    n_slots = pos.num_slots
    a = scenario.num_uavs
    caps = scenario.p_max_w()
    matrices = np.empty((n_slots + 1, a, a), dtype=np.int8)
    powers = np.empty((a, n_slots + 1))
    for n in range(n_slots + 1):
        matrices[n], powers[:, n] = lmst_slot(pos.positions[:, n, :], caps,
                                              scenario.radio)
    return matrices, powers


# Metrics ----------------------------------------------------------------------


def throughput_series(matrices: np.ndarray, powers: np.ndarray,
                      pos: PositionSeries, radio: RadioParams,
                      ) -> tuple[np.ndarray, float]:
    """Per-slot sums of link rates over connected pairs (a < b), and total.

    Each undirected link is credited once, at the lower-indexed endpoint's
    transmit power.
    """
    n_slots = matrices.shape[0] - 1
    a_count = matrices.shape[1]
    per_slot = np.zeros(n_slots + 1)
    for n in range(n_slots + 1):
        pts = pos.positions[:, n, :]
        total = 0.0
        for a in range(a_count):
            for b in range(a + 1, a_count):
                if matrices[n, a, b] and powers[a, n] > 0:
                    d = float(np.linalg.norm(pts[a] - pts[b]))
                    h = radio.mu_f / (d * d)
                    total += link_throughput(powers[a, n], h, radio)
        per_slot[n] = total
    return per_slot, float(per_slot.sum())


def hops_per_slot(matrices: np.ndarray) -> np.ndarray:
    """Mean shortest-path hop count over unordered pairs, per slot."""
    n_slots, a, _ = matrices.shape
    out = np.empty(n_slots)
    for n in range(n_slots):
        adj = matrices[n].astype(bool)
        total = 0.0
        count = 0
        disconnected = False
        for s in range(a):
            dist = np.full(a, -1)
            dist[s] = 0
            frontier = [s]
            while frontier:
                nxt = []
                for i in frontier:
                    for j in np.nonzero(adj[i])[0]:
                        if dist[j] < 0:
                            dist[j] = dist[i] + 1
                            nxt.append(j)
                frontier = nxt
            for t in range(s + 1, a):
                if dist[t] < 0:
                    disconnected = True
                else:
                    total += dist[t]
                    count += 1
        out[n] = np.inf if disconnected else (total / count if count else 0.0)
    return out


def average_hops(matrices: np.ndarray) -> float:
    """Average of the per-slot means; infinity if any slot is disconnected."""
    per_slot = hops_per_slot(matrices)
    return float("inf") if np.isinf(per_slot).any() else float(per_slot.mean())


TopoBuilder = Callable[[np.ndarray, np.ndarray, int], np.ndarray]
"""(positions (A', T, 3), original uav indices, first slot) -> (T, A', A')"""


def connectivity_rate(topo_builder: TopoBuilder, pos: PositionSeries,
                      scenario: Scenario, n_dc: int) -> float:
    """Mean surviving-component fraction after removing each UAV at n_dc."""
    n_slots = pos.num_slots
    if not (1 <= n_dc <= n_slots):
        raise ValueError(f"n_dc must lie in 1..{n_slots}, got {n_dc}")
    a_count = scenario.num_uavs
    total = 0.0
    for removed in range(a_count):
        keep = np.array([i for i in range(a_count) if i != removed])
        if len(keep) == 1:  # a lone survivor is trivially its own network
            total += (n_slots - n_dc + 1) / (a_count - 1)
            continue
        sub_pos = pos.positions[keep][:, n_dc:, :]
        mats = topo_builder(sub_pos, keep, n_dc)
        for t in range(mats.shape[0]):
            total += largest_component_size(mats[t]) / (a_count - 1)
    return total / (a_count * (n_slots - n_dc + 1))


def make_ctop_builder(scenario: Scenario) -> TopoBuilder:
    """Survivor rebuild with C-TOP; falls back to the max-power topology on
    slots where the degree floor is infeasible for the reduced fleet."""
    def build(sub_pos: np.ndarray, uav_idx: np.ndarray, first_slot: int) -> np.ndarray:
        caps = scenario.p_max_w()[uav_idx]
        k_eff = min(scenario.k_min, len(uav_idx) - 1)
        t_count = sub_pos.shape[1]
        out = np.empty((t_count, len(uav_idx), len(uav_idx)), dtype=np.int8)
        for t in range(t_count):
            pts = sub_pos[:, t, :]
            try:
                out[t] = build_slot_topology_raw(pts, caps, scenario.radio,
                                                 k_eff, scenario.delta,
                                                 slot=first_slot + t)[0]
            except (InfeasibleTopology, ZeroDistance):
                out[t] = _max_power_adjacency(pts, caps, scenario.radio)
        return out
    return build


def make_mtp_builder(scenario: Scenario, pos: PositionSeries) -> TopoBuilder:
    alive = mtp_alive_mask(scenario, pos.num_slots, pos.slot_duration_s)

    def build(sub_pos: np.ndarray, uav_idx: np.ndarray, first_slot: int) -> np.ndarray:
        caps = scenario.p_max_w()[uav_idx]
        t_count = sub_pos.shape[1]
        out = np.empty((t_count, len(uav_idx), len(uav_idx)), dtype=np.int8)
        for t in range(t_count):
            out[t] = _max_power_adjacency(sub_pos[:, t, :], caps, scenario.radio,
                                          alive[uav_idx, first_slot + t])
        return out
    return build


def make_lmst_builder(scenario: Scenario) -> TopoBuilder:
    def build(sub_pos: np.ndarray, uav_idx: np.ndarray, first_slot: int) -> np.ndarray:
        caps = scenario.p_max_w()[uav_idx]
        t_count = sub_pos.shape[1]
        out = np.empty((t_count, len(uav_idx), len(uav_idx)), dtype=np.int8)
        for t in range(t_count):
            out[t] = lmst_slot(sub_pos[:, t, :], caps, scenario.radio)[0]
        return out
    return build


# Pipeline ----------------------------------------------------------------------


@dataclass
class RunReport:
    """Everything one mission run produces; serialized by the report module."""

    scenario: dict
    seed: int
    planner_choice: str
    topo_choice: str
    n_dc: int
    routes: list[list[int]]          # 1-based node ids, starts included
    total_length_m: float
    slot_duration_s: float
    n_slots: int
    matrices: np.ndarray             # (N+1, A, A)
    positions: np.ndarray            # (A, N+1, 3) m
    powers: np.ndarray               # (A, N+1) W
    p_min: np.ndarray | None         # C-TOP intervals, None for baselines
    p_max: np.ndarray | None
    throughput_per_slot: np.ndarray
    throughput_total: float
    connectivity: float
    avg_hops: float
    hops_slots: np.ndarray
    energy_j: np.ndarray
    violations: list[str] = field(default_factory=list)


def plan_routes(scenario: Scenario, planner_choice: str, seed: int,
                model_path=None) -> TrajectorySet:
    """Produce routes with the chosen planner and wrap them as a trajectory."""
    instance = Instance.from_scenario(scenario)
    if planner_choice == "heuristic":
        wp_routes = heuristic_plan(instance, seed=seed)
    elif planner_choice == "oracle":
        result = exhaustive_oracle(instance)
        if not result.feasible:
            raise DeadEnd("exhaustive oracle found no feasible plan")
        wp_routes = result.routes
    elif planner_choice == "trained":
        if model_path is None:
            raise ValueError("planner 'trained' needs a model checkpoint path")
        model = load_checkpoint(model_path)
        rollout = decode_rollout(model, instance, mode="greedy")
        if rollout.dead_end:
            raise DeadEnd("trained policy hit a dead end under greedy decoding")
        wp_routes = rollout.routes
    else:
        raise ValueError(f"unknown planner choice {planner_choice!r}")
    routes = []
    for a, uav in enumerate(scenario.uavs):
        routes.append(tuple([uav.start_point]
                            + [scenario.num_starts + 1 + wp for wp in wp_routes[a]]))
    return TrajectorySet(routes=tuple(routes), num_starts=scenario.num_starts,
                         num_waypoints=scenario.num_waypoints)


@contextlib.contextmanager
def _stage(name: str):
    """Prefix toolkit errors with the pipeline stage that raised them."""
    try:
        yield
    except FanetError as e:
        e.args = (f"[{name}] {e.args[0]}" if e.args else f"[{name}]",) + e.args[1:]
        raise


def run_pipeline(scenario: Scenario, planner_choice: str = "heuristic",
                 topo_choice: str = "ctop", seed: int = 0, model_path=None,
                 n_dc: int | None = None) -> RunReport:
    """plan -> positions -> topology -> power -> metrics, deterministically."""
    from .scenario import scenario_to_dict

    if n_dc is None:
        n_dc = min(DEFAULT_N_DC, scenario.n_slots)

    with _stage("plan"):
        traj = plan_routes(scenario, planner_choice, seed, model_path)
    with _stage("positions"):
        pos = positions_over_slots(traj, scenario)
        plan_report = validate_plan(traj, pos, scenario)
    violations = plan_report.all_violations()

    with _stage("topology"):
        if topo_choice == "ctop":
            topo = optimize_series(pos, scenario)
            p_min, p_max = topo.p_min, topo.p_max
            matrices = topo.matrices
            violations = violations + list(topo.prune_violations)
            builder = make_ctop_builder(scenario)
        elif topo_choice == "mtp":
            matrices, powers = mtp_series(pos, scenario)
            p_min = p_max = None
            builder = make_mtp_builder(scenario, pos)
        elif topo_choice == "lmst":
            matrices, powers = lmst_series(pos, scenario)
            p_min = p_max = None
            builder = make_lmst_builder(scenario)
        else:
            raise ValueError(f"unknown topology algorithm {topo_choice!r}")
    if topo_choice == "ctop":
        with _stage("power"):
            powers = solve_all(topo, pos, scenario).p_w

    with _stage("metrics"):
        per_slot, total = throughput_series(matrices, powers, pos, scenario.radio)
        hops_slots = hops_per_slot(matrices)
        avg = float("inf") if np.isinf(hops_slots).any() else float(hops_slots.mean())
        xi = connectivity_rate(builder, pos, scenario, n_dc)
    energy = powers.sum(axis=1) * pos.slot_duration_s

    points = scenario.points()
    total_length = traj.total_length(points)
    return RunReport(
        scenario=scenario_to_dict(scenario),
        seed=seed,
        planner_choice=planner_choice,
        topo_choice=topo_choice,
        n_dc=n_dc,
        routes=[list(r) for r in traj.routes],
        total_length_m=float(total_length),
        slot_duration_s=pos.slot_duration_s,
        n_slots=scenario.n_slots,
        matrices=matrices,
        positions=pos.positions,
        powers=powers,
        p_min=p_min,
        p_max=p_max,
        throughput_per_slot=per_slot,
        throughput_total=total,
        connectivity=xi,
        avg_hops=avg,
        hops_slots=hops_slots,
        energy_j=energy,
        violations=violations,
    )
