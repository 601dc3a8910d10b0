"""C-TOP: admissible transmit-power intervals and the induced topology.

Per slot, each UAV gets a half-open power interval [p_min, p_max) chosen so
that transmitting anywhere inside it reaches exactly its nearest-neighbor
set. The construction tracks per-UAV *reach radii* (always actual inter-UAV
distances) and then converts to powers, so link membership never depends on
floating-point round-trips:

  p_min = gamma * r^2 / mu_f, nudged up by a few ULP so the boundary
          neighbor passes the inclusive link predicate at any drawn power;
  p_max = gamma * d_next^2 / mu_f, nudged down so the first excluded
          neighbor stays excluded for every power strictly below it.

A link is up only when both directions meet the sensitivity threshold
(the construction repairs one-way neighbor sets, so requiring both sides
is what makes the stored matrix reproducible from the intervals alone).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleTopology, ZeroDistance
from .kinematics import PositionSeries, build_distance_matrix
from .radio import RadioParams, link_up, path_loss
from .scenario import Scenario

_EPS_UP = 1.0 + 8.0 * np.finfo(float).eps
_EPS_DOWN = 1.0 - 8.0 * np.finfo(float).eps


# Basic graph helpers --------------------------------------------------------


def degrees(c: np.ndarray) -> np.ndarray:
    """Neighbor counts, ignoring the unit diagonal."""
    c = np.asarray(c)
    return c.sum(axis=1) - np.diag(c)


def connected_components(c: np.ndarray) -> np.ndarray:
    """BFS component label per node for a symmetric 0/1 matrix."""
    adj = np.asarray(c, dtype=bool)
    n = len(adj)
    labels = np.full(n, -1, dtype=int)
    current = 0
    for s in range(n):
        if labels[s] >= 0:
            continue
        visited = np.zeros(n, dtype=bool)
        visited[s] = True
        frontier = visited.copy()
        while frontier.any():
            nxt = adj[frontier].any(axis=0) & ~visited
            visited |= nxt
            frontier = nxt
        labels[visited] = current
        current += 1
    return labels


def is_globally_connected(c: np.ndarray) -> bool:
    """Authoritative connectivity test (breadth-first search)."""
    return bool(connected_components(c).max() == 0)


def matrix_power_connected(c: np.ndarray, h: int) -> bool:
    """The C^H > 0 test; exposed for parity checks against BFS only."""
    if h < 1:
        raise ValueError(f"matrix power exponent must be >= 1, got {h}")
    base = np.asarray(c, dtype=bool)
    acc = base.copy()
    for _ in range(h - 1):
        acc = (acc.astype(np.int64) @ base.astype(np.int64)) > 0
    return bool(acc.all())


def largest_component_size(c: np.ndarray) -> int:
    labels = connected_components(c)
    return int(np.bincount(labels).max())


# Radius-based slot engine ---------------------------------------------------


def _distances(positions: np.ndarray) -> np.ndarray:
    d = build_distance_matrix(positions)
    off = d.copy()
    np.fill_diagonal(off, np.inf)
    if np.any(off <= 0.0):
        a, b = np.argwhere(off <= 0.0)[0]
        raise ZeroDistance(f"uavs {a + 1} and {b + 1} are co-located")
    return d


def _power_for_radius(r: np.ndarray, gamma: float, mu: float) -> np.ndarray:
    return gamma * r * r / mu


def _check_radii(r: np.ndarray, caps: np.ndarray, gamma: float, mu: float,
                 slot: int, context: str) -> None:
    p_needed = _power_for_radius(r, gamma, mu) * _EPS_UP
    bad = np.nonzero(p_needed > caps)[0]
    if bad.size:
        a = int(bad[0])
        raise InfeasibleTopology(a + 1, slot,
                                 f"{context}: needs {p_needed[a]:.6g} W > p_max {caps[a]:.6g} W")


def _intervals_from_radii(dist: np.ndarray, r: np.ndarray, caps: np.ndarray,
                          gamma: float, mu: float) -> tuple[np.ndarray, np.ndarray]:
    p_lo = _power_for_radius(r, gamma, mu) * _EPS_UP
    off = dist.copy()
    np.fill_diagonal(off, np.inf)
    beyond = np.where(off > r[:, None], off, np.inf)
    d_next = beyond.min(axis=1)
    p_hi = np.where(np.isfinite(d_next),
                    _power_for_radius(d_next, gamma, mu) * _EPS_DOWN, np.inf)
    p_hi = np.minimum(p_hi, caps)
    p_hi = np.maximum(p_hi, p_lo)  # exact distance ties collapse the interval
    return p_lo, p_hi


def _ball_adjacency(dist: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Two-sided reachability: link iff each endpoint covers the distance."""
    n = len(r)
    out = dist <= r[:, None]
    np.fill_diagonal(out, False)
    adj = (out & out.T).astype(np.int8)
    np.fill_diagonal(adj, 1)
    return adj


def _out_balls(dist: np.ndarray, r: np.ndarray) -> np.ndarray:
    out = dist <= r[:, None]
    np.fill_diagonal(out, False)
    return out


def _initial_radii(dist: np.ndarray, k_min: int) -> np.ndarray:
    n = len(dist)
    ids = np.arange(n)
    radii = np.empty(n)
    for a in range(n):
        row = dist[a].copy()
        row[a] = np.inf
        order = np.lexsort((ids, row))  # ties broken by lower uav id
        radii[a] = row[order[k_min - 1]]
    return radii


def _symmetrize_radii(dist: np.ndarray, r: np.ndarray, caps: np.ndarray,
                      gamma: float, mu: float, slot: int) -> np.ndarray:
    """Raise radii until every one-way reach is answered. Fixed point."""
    r = r.copy()
    while True:
        out = _out_balls(dist, r)
        need = out.T & ~out
        if not need.any():
            return r
        required = np.where(need, dist, 0.0).max(axis=1)
        r_new = np.maximum(r, required)
        _check_radii(r_new, caps, gamma, mu, slot, "two-way link repair")
        r = r_new


def _connect_radii(dist: np.ndarray, r: np.ndarray, caps: np.ndarray,
                   gamma: float, mu: float, slot: int) -> np.ndarray:
    """Bridge components via the globally shortest unconnected pair."""
    r = r.copy()
    while True:
        adj = _ball_adjacency(dist, r)
        labels = connected_components(adj)
        if labels.max() == 0:
            return r
        cross = labels[:, None] != labels[None, :]
        candidates = np.where(cross, dist, np.inf)
        a, b = np.unravel_index(np.argmin(candidates), candidates.shape)
        bridge = dist[a, b]
        r_new = r.copy()
        r_new[a] = max(r_new[a], bridge)
        r_new[b] = max(r_new[b], bridge)
        _check_radii(r_new, caps, gamma, mu, slot, "global connectivity bridge")
        r = _symmetrize_radii(dist, r_new, caps, gamma, mu, slot)


def _prune_radii(dist: np.ndarray, r: np.ndarray, k_min: int, delta: int,
                 slot: int) -> tuple[np.ndarray, list[str]]:
    """Drop farthest extra neighbors where power separation permits it.

    A removal must keep both endpoints at or above the degree floor, keep
    the graph connected, and be expressible by lowering one endpoint's
    power (that endpoint's strictly-farthest neighbor). Residual violations
    are reported, not fatal.
    """
    r = r.copy()
    n = len(r)
    cap_deg = k_min + delta
    changed = True
    while changed:
        changed = False
        adj = _ball_adjacency(dist, r).astype(bool)
        np.fill_diagonal(adj, False)
        deg = adj.sum(axis=1)
        for a in range(n):
            while deg[a] > cap_deg:
                nbrs = sorted(np.nonzero(adj[a])[0], key=lambda b: (-dist[a, b], b))
                removed = False
                for b in nbrs:
                    side = None
                    if all(dist[a, c] < dist[a, b] for c in nbrs if c != b):
                        side = a
                    else:
                        b_nbrs = np.nonzero(adj[b])[0]
                        if all(dist[b, c] < dist[a, b] for c in b_nbrs if c != a):
                            side = b
                    if side is None:
                        continue
                    if deg[a] - 1 < k_min or deg[b] - 1 < k_min:
                        continue
                    trial = adj.copy()
                    trial[a, b] = trial[b, a] = False
                    diag = trial.astype(np.int8)
                    np.fill_diagonal(diag, 1)
                    if not is_globally_connected(diag):
                        continue
                    other = b if side == a else a
                    kept = [c for c in np.nonzero(adj[side])[0] if c != other]
                    r[side] = max(dist[side, c] for c in kept)
                    adj = trial
                    deg[a] -= 1
                    deg[b] -= 1
                    changed = True
                    removed = True
                    break
                if not removed:
                    break
    adj = _ball_adjacency(dist, r)
    residual = []
    deg = degrees(adj)
    for a in np.nonzero(deg > cap_deg)[0]:
        residual.append(
            f"slot {slot}: uav {a + 1} keeps degree {int(deg[a])} > k_min+delta={cap_deg} "
            "(remaining removals would break connectivity, the degree floor, or a distance tie)")
    return r, residual


# Public per-slot operations -------------------------------------------------


def power_intervals_slot(positions: np.ndarray, scenario: Scenario,
                         slot: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Initial per-UAV [p_min, p_max) from the k-th / (k+1)-th neighbor."""
    dist = _distances(positions)
    radio = scenario.radio
    caps = scenario.p_max_w()
    radii = _initial_radii(dist, scenario.k_min)
    _check_radii(radii, caps, radio.sensitivity_w, radio.mu_f, slot,
                 f"{scenario.k_min}-th nearest neighbor out of range")
    return _intervals_from_radii(dist, radii, caps, radio.sensitivity_w, radio.mu_f)


def adjacency_from_intervals(positions: np.ndarray, p_min: np.ndarray,
                             radio: RadioParams) -> np.ndarray:
    """Directed draft: who hears whom when everyone transmits at p_min."""
    dist = _distances(positions)
    n = len(dist)
    draft = np.zeros((n, n), dtype=np.int8)
    for a in range(n):
        for b in range(n):
            if a != b and link_up(p_min[a], path_loss(dist[a, b], radio), radio.sensitivity_w):
                draft[a, b] = 1
    np.fill_diagonal(draft, 1)
    return draft


def _radii_from_draft(dist: np.ndarray, draft: np.ndarray) -> np.ndarray:
    out = np.asarray(draft, dtype=bool).copy()
    np.fill_diagonal(out, False)
    return np.where(out, dist, 0.0).max(axis=1)


def symmetrize_links(draft: np.ndarray, positions: np.ndarray, scenario: Scenario,
                     slot: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Repair one-way links by raising powers; returns (matrix, p_min, p_max)."""
    dist = _distances(positions)
    radio = scenario.radio
    caps = scenario.p_max_w()
    radii = _symmetrize_radii(dist, _radii_from_draft(dist, draft), caps,
                              radio.sensitivity_w, radio.mu_f, slot)
    p_lo, p_hi = _intervals_from_radii(dist, radii, caps, radio.sensitivity_w, radio.mu_f)
    return _ball_adjacency(dist, radii), p_lo, p_hi


def connect_global(c: np.ndarray, positions: np.ndarray, scenario: Scenario,
                   slot: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bridge isolated clusters; returns (matrix, p_min, p_max)."""
    dist = _distances(positions)
    radio = scenario.radio
    caps = scenario.p_max_w()
    radii = _connect_radii(dist, _radii_from_draft(dist, c), caps,
                           radio.sensitivity_w, radio.mu_f, slot)
    p_lo, p_hi = _intervals_from_radii(dist, radii, caps, radio.sensitivity_w, radio.mu_f)
    return _ball_adjacency(dist, radii), p_lo, p_hi


def prune_extras(c: np.ndarray, positions: np.ndarray, scenario: Scenario,
                 slot: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[str]]:
    """Shed extra neighbors; returns (matrix, p_min, p_max, violations)."""
    dist = _distances(positions)
    radio = scenario.radio
    caps = scenario.p_max_w()
    radii, residual = _prune_radii(dist, _radii_from_draft(dist, c),
                                   scenario.k_min, scenario.delta, slot)
    p_lo, p_hi = _intervals_from_radii(dist, radii, caps, radio.sensitivity_w, radio.mu_f)
    return _ball_adjacency(dist, radii), p_lo, p_hi, residual


# Series driver ---------------------------------------------------------------


@dataclass(frozen=True)
class TopologySeries:
    """Per-slot reachability matrices plus the admissible power intervals."""

    matrices: np.ndarray  # (N+1, A, A) int8, unit diagonal
    p_min: np.ndarray     # (A, N+1) W
    p_max: np.ndarray     # (A, N+1) W
    prune_violations: tuple[str, ...] = field(default_factory=tuple)

    @property
    def num_slots(self) -> int:
        return self.matrices.shape[0] - 1

    @property
    def num_uavs(self) -> int:
        return self.matrices.shape[1]


def build_slot_topology_raw(positions: np.ndarray, caps: np.ndarray,
                            radio: RadioParams, k_min: int, delta: int,
                            slot: int = 0,
                            ) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[str]]:
    """One full C-TOP pass with explicit caps (used for survivor rebuilds)."""
    dist = _distances(positions)
    gamma, mu = radio.sensitivity_w, radio.mu_f
    radii = _initial_radii(dist, k_min)
    _check_radii(radii, caps, gamma, mu, slot, f"{k_min}-th nearest neighbor out of range")
    radii = _symmetrize_radii(dist, radii, caps, gamma, mu, slot)
    radii = _connect_radii(dist, radii, caps, gamma, mu, slot)
    radii, residual = _prune_radii(dist, radii, k_min, delta, slot)
    p_lo, p_hi = _intervals_from_radii(dist, radii, caps, gamma, mu)
    return _ball_adjacency(dist, radii), p_lo, p_hi, residual


def build_slot_topology(positions: np.ndarray, scenario: Scenario, slot: int = 0,
                        k_min: int | None = None,
                        ) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[str]]:
    """One full C-TOP pass for a single slot's positions."""
    k = scenario.k_min if k_min is None else k_min
    return build_slot_topology_raw(positions, scenario.p_max_w(), scenario.radio,
                                   k, scenario.delta, slot)


def optimize_series(pos: PositionSeries, scenario: Scenario) -> TopologySeries:
    """Run C-TOP per slot; the result is symmetric, connected, degree-floored."""
    n_slots = pos.num_slots
    a = pos.num_uavs
    matrices = np.empty((n_slots + 1, a, a), dtype=np.int8)
    p_min = np.empty((a, n_slots + 1))
    p_max = np.empty((a, n_slots + 1))
    violations: list[str] = []
    for n in range(n_slots + 1):
        c, lo, hi, residual = build_slot_topology(pos.positions[:, n, :], scenario, slot=n)
        matrices[n] = c
        p_min[:, n] = lo
        p_max[:, n] = hi
        violations.extend(residual)
    return TopologySeries(matrices=matrices, p_min=p_min, p_max=p_max,
                          prune_violations=tuple(violations))


def evaluate_adjacency(positions: np.ndarray, powers: np.ndarray,
                       radio: RadioParams) -> np.ndarray:
    """Re-evaluate the link predicate at concrete powers (both directions)."""
    dist = _distances(positions)
    n = len(dist)
    c = np.zeros((n, n), dtype=np.int8)
    for aa in range(n):
        for bb in range(aa + 1, n):
            h = path_loss(dist[aa, bb], radio)
            if link_up(powers[aa], h, radio.sensitivity_w) and \
               link_up(powers[bb], h, radio.sensitivity_w):
                c[aa, bb] = c[bb, aa] = 1
    np.fill_diagonal(c, 1)
    return c
