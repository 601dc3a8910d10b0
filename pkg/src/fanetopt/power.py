"""Throughput-maximizing transmit powers over the C-TOP intervals.

With the topology fixed, the problem separates per UAV: each undirected
link is credited once, at the lower-indexed endpoint, so UAV a's objective
sums Shannon rates over its links to higher-indexed neighbors. Each per-UAV
problem couples its slots only through the energy budget, which makes the
dual one-dimensional: we bisect the energy multiplier and invert the
strictly decreasing per-slot marginal by root-finding (waterfilling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import InfeasibleBudget, InstanceTooLarge
from .kinematics import PositionSeries
from .radio import RadioParams
from .scenario import Scenario
from .topology import TopologySeries

_LN2 = math.log(2.0)
_BISECT_ITERS = 200
_DUAL_GAP = 1e-12


@dataclass(frozen=True)
class EnergyBudget:
    """Per-UAV communication energy caps and the slot length they apply over."""

    e_max_j: np.ndarray
    slot_duration_s: float

    def __post_init__(self):
        arr = np.array(self.e_max_j, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "e_max_j", arr)
        if self.slot_duration_s <= 0 or np.any(arr <= 0):
            raise ValueError("energy budget entries and slot duration must be positive")


@dataclass(frozen=True)
class PowerSchedule:
    """Transmit powers per UAV per slot boundary: shape (A, N+1) W."""

    p_w: np.ndarray

    def __post_init__(self):
        arr = np.array(self.p_w, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "p_w", arr)

    def energy_j(self, slot_duration_s: float) -> np.ndarray:
        return self.p_w.sum(axis=1) * slot_duration_s


def slot_marginal(p: float, gains: np.ndarray, noise: float, bandwidth: float) -> float:
    """d/dp of the slot rate sum; strictly decreasing in p."""
    if len(gains) == 0:
        return 0.0
    return bandwidth / _LN2 * float(np.sum(gains / (noise + p * gains)))


def slot_rate(p, gains: np.ndarray, noise: float, bandwidth: float):
    if len(gains) == 0:
        return np.zeros_like(np.asarray(p, dtype=float))
    p = np.asarray(p, dtype=float)
    snr = np.multiply.outer(p, gains) / noise
    return bandwidth * np.log2(1.0 + snr).sum(axis=-1)


def objective(p: np.ndarray, gains_per_slot: list[np.ndarray], noise: float,
              bandwidth: float) -> float:
    return float(sum(slot_rate(float(pn), g, noise, bandwidth)
                     for pn, g in zip(p, gains_per_slot)))


def _slot_power_at(lam_dt: float, lo: float, hi: float, gains: np.ndarray,
                   noise: float, bandwidth: float) -> float:
    if hi <= lo:
        return lo
    if len(gains) == 0:
        return hi if lam_dt == 0.0 else lo
    if slot_marginal(hi, gains, noise, bandwidth) >= lam_dt:
        return hi
    if slot_marginal(lo, gains, noise, bandwidth) <= lam_dt:
        return lo
    return float(brentq(lambda p: slot_marginal(p, gains, noise, bandwidth) - lam_dt,
                        lo, hi, xtol=1e-14, rtol=1e-15, maxiter=200))


def solve_single(p_lo: np.ndarray, p_hi: np.ndarray, gains_per_slot: list[np.ndarray],
                 e_max: float, dt: float, noise: float, bandwidth: float,
                 ) -> tuple[np.ndarray, float]:
    """Waterfill one UAV's powers; returns (powers, energy dual lambda)."""
    p_lo = np.asarray(p_lo, dtype=float)
    p_hi = np.asarray(p_hi, dtype=float)
    required = dt * float(p_lo.sum())
    if required > e_max * (1.0 + 1e-12):
        raise InfeasibleBudget(0, required, e_max)

    def powers_at(lam: float) -> np.ndarray:
        return np.array([_slot_power_at(lam * dt, lo, hi, g, noise, bandwidth)
                         for lo, hi, g in zip(p_lo, p_hi, gains_per_slot)])

    p0 = powers_at(0.0)
    if dt * p0.sum() <= e_max:
        return p0, 0.0

    lam_hi = max(slot_marginal(lo, g, noise, bandwidth) / dt
                 for lo, g in zip(p_lo, gains_per_slot))
    if lam_hi <= 0.0:
        return p_lo.copy(), 0.0  # nothing to gain from power anywhere
    left, right = 0.0, lam_hi
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (left + right)
        energy = dt * powers_at(mid).sum()
        if energy > e_max:
            left = mid
        else:
            right = mid
            if e_max - energy <= _DUAL_GAP * max(e_max, 1.0):
                break
    return powers_at(right), right


def kkt_residual(p: np.ndarray, lam: float, p_lo: np.ndarray, p_hi: np.ndarray,
                 gains_per_slot: list[np.ndarray], dt: float, noise: float,
                 bandwidth: float) -> float:
    """Max relative per-slot stationarity violation at the returned point."""
    worst = 0.0
    for pn, lo, hi, g in zip(p, p_lo, p_hi, gains_per_slot):
        if hi <= lo:
            continue
        m = slot_marginal(float(pn), g, noise, bandwidth)
        target = lam * dt
        tol = 1e-9 * (hi - lo)
        if pn >= hi - tol:
            viol = max(0.0, target - m)
        elif pn <= lo + tol:
            viol = max(0.0, m - target)
        else:
            viol = abs(m - target)
        scale = max(target, m, 1e-300)
        worst = max(worst, viol / scale)
    return worst


def credited_gains(topo: TopologySeries, pos: PositionSeries,
                   radio: RadioParams) -> list[list[np.ndarray]]:
    """Per UAV, per slot: gains of links credited to it (higher-index peers)."""
    a_count = topo.num_uavs
    n_slots = topo.num_slots
    gains: list[list[np.ndarray]] = [[] for _ in range(a_count)]
    for n in range(n_slots + 1):
        pts = pos.positions[:, n, :]
        c = topo.matrices[n]
        for a in range(a_count):
            peers = [b for b in range(a + 1, a_count) if c[a, b]]
            if peers:
                d = np.linalg.norm(pts[peers] - pts[a], axis=1)
                gains[a].append(radio.mu_f / (d * d))
            else:
                gains[a].append(np.empty(0))
    return gains


def solve_uav(a: int, topo: TopologySeries, gains: list[np.ndarray],
              budget: EnergyBudget, radio: RadioParams) -> tuple[np.ndarray, float]:
    """Optimal powers for UAV ``a`` (1-based id) given its credited gains."""
    idx = a - 1
    try:
        return solve_single(topo.p_min[idx], topo.p_max[idx], gains,
                            float(budget.e_max_j[idx]), budget.slot_duration_s,
                            radio.noise_power_w, radio.bandwidth_hz)
    except InfeasibleBudget as e:
        raise InfeasibleBudget(a, e.required, e.e_max) from None


def _clamp_below_upper(p: np.ndarray, p_lo: np.ndarray, p_hi: np.ndarray) -> np.ndarray:
    """Pull boundary solutions strictly inside the half-open interval."""
    below = np.nextafter(p_hi, -np.inf)
    return np.where((p >= p_hi) & (p_hi > p_lo), np.maximum(below, p_lo), p)


def solve_all(topo: TopologySeries, pos: PositionSeries, scenario: Scenario,
              ) -> PowerSchedule:
    """Solve every UAV's problem; emitted powers stay inside [p_min, p_max)."""
    radio = scenario.radio
    budget = EnergyBudget(e_max_j=scenario.e_max_j(),
                          slot_duration_s=pos.slot_duration_s)
    all_gains = credited_gains(topo, pos, radio)
    p = np.empty_like(topo.p_min)
    for a in range(topo.num_uavs):
        powers, _ = solve_uav(a + 1, topo, all_gains[a], budget, radio)
        p[a] = _clamp_below_upper(powers, topo.p_min[a], topo.p_max[a])
    return PowerSchedule(p_w=p)


def oracle_grid(topo: TopologySeries, pos: PositionSeries, scenario: Scenario,
                resolution: float) -> PowerSchedule:
    """Exhaustive grid search over the feasible boxes; test oracle only."""
    a_count = topo.num_uavs
    n_slots = topo.num_slots
    if a_count > 3 or n_slots > 4:
        raise InstanceTooLarge(f"oracle guard: A={a_count} > 3 or N={n_slots} > 4")
    radio = scenario.radio
    dt = pos.slot_duration_s
    all_gains = credited_gains(topo, pos, radio)
    e_max = scenario.e_max_j()
    p = np.empty_like(topo.p_min)
    for a in range(a_count):
        # anything above lo + total energy slack is infeasible, so the grid
        # only needs to cover the reachable sub-box
        slack = e_max[a] / dt - float(topo.p_min[a].sum())
        grids = []
        for n in range(n_slots + 1):
            lo, hi = topo.p_min[a, n], topo.p_max[a, n]
            hi = min(hi, lo + max(slack, 0.0))
            npts = max(2, int(math.ceil((hi - lo) / resolution)) + 1)
            grids.append(np.linspace(lo, hi, npts))
        combos = int(np.prod([len(g) for g in grids]))
        if combos > 3_000_000:
            raise InstanceTooLarge(f"oracle guard: {combos} grid combinations")
        mesh = np.stack([m.ravel() for m in np.meshgrid(*grids, indexing="ij")])
        feasible = dt * mesh.sum(axis=0) <= e_max[a] * (1.0 + 1e-12)
        mesh = mesh[:, feasible]
        obj = np.zeros(mesh.shape[1])
        for n in range(n_slots + 1):
            obj += slot_rate(mesh[n], all_gains[a][n], radio.noise_power_w,
                             radio.bandwidth_hz)
        p[a] = mesh[:, int(np.argmax(obj))]
    return PowerSchedule(p_w=p)
