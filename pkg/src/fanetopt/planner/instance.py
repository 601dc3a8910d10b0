"""Planning instances and the shared fleet-construction state.

An instance materializes one start token per UAV (tokens 0..A-1, duplicated
coordinates when UAVs share a launch point) followed by W waypoint tokens.
Routes are built token by token: picking a start token opens that UAV's
route, picking a waypoint extends the currently open route. All UAVs fly
simultaneously from t = 0; during construction, UAVs whose tokens are still
unchosen are assumed to hover at their starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..scenario import Scenario


@dataclass(frozen=True)
class Instance:
    """One path-planning problem: geometry, fleet limits, link constraints."""

    start_xyz: np.ndarray  # (A, 3) one start token per UAV
    wp_xyz: np.ndarray     # (W, 3)
    speed: np.ndarray      # (A,) m/s
    t_max: np.ndarray      # (A,) s
    p_max: np.ndarray      # (A,) W
    k_min: int
    d_min: float
    mu_f: float
    gamma: float

    def __post_init__(self):
        for name in ("start_xyz", "wp_xyz", "speed", "t_max", "p_max"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.num_uavs == 1 and self.k_min != 0:
            raise ValueError("single-UAV instances must use k_min=0")
        if self.k_min > self.num_uavs - 1 and self.num_uavs > 1:
            raise ValueError(f"k_min={self.k_min} impossible for {self.num_uavs} UAVs")

    @property
    def num_uavs(self) -> int:
        return len(self.start_xyz)

    @property
    def num_waypoints(self) -> int:
        return len(self.wp_xyz)

    @property
    def num_nodes(self) -> int:
        return self.num_uavs + self.num_waypoints

    def node_xyz(self) -> np.ndarray:
        return np.vstack([self.start_xyz, self.wp_xyz])

    def normalized_node_xyz(self) -> np.ndarray:
        """Node coordinates centered and scaled into a unit box.

        The policy network sees scale-free geometry; route lengths are
        always computed from the raw coordinates.
        """
        xyz = self.node_xyz()
        lo, hi = xyz.min(axis=0), xyz.max(axis=0)
        scale = max(float((hi - lo).max()), 1e-9)
        return (xyz - (lo + hi) / 2.0) / scale

    def max_range(self) -> np.ndarray:
        """Per-UAV link range at maximum transmit power."""
        return np.sqrt(self.p_max * self.mu_f / self.gamma)

    def pair_range(self) -> np.ndarray:
        """Two-sided max-power link range per UAV pair."""
        r = self.max_range()
        return np.minimum(r[:, None], r[None, :])

    @classmethod
    def from_scenario(cls, scenario: Scenario) -> "Instance":
        starts = np.array([scenario.start_points[u.start_point - 1]
                           for u in scenario.uavs])
        return cls(
            start_xyz=starts,
            wp_xyz=scenario.waypoints,
            speed=scenario.speeds(),
            t_max=scenario.t_max_s(),
            p_max=scenario.p_max_w(),
            k_min=scenario.k_min if scenario.num_uavs > 1 else 0,
            d_min=scenario.d_min_m,
            mu_f=scenario.radio.mu_f,
            gamma=scenario.radio.sensitivity_w,
        )


def random_instance(rng: np.random.Generator, n_waypoints: int, n_uavs: int = 1,
                    side_m: float = 100.0, z_m: float = 50.0,
                    speed_mps: float = 10.0, range_factor: float = 2.0,
                    k_min: int | None = None, d_min_m: float = 0.0,
                    mu_f: float = 1.693e-5, gamma: float = 1e-10) -> Instance:
    """Uniform waypoints over a box with UAV starts at the box corners.

    ``range_factor`` scales the max-power link range against the box
    diagonal; the default keeps connectivity non-binding so the planner
    focuses on length.
    """
    wps = np.column_stack([
        rng.uniform(0.0, side_m, size=n_waypoints),
        rng.uniform(0.0, side_m, size=n_waypoints),
        np.full(n_waypoints, z_m),
    ])
    corners = np.array([[0.0, 0.0, z_m], [side_m, 0.0, z_m],
                        [0.0, side_m, z_m], [side_m, side_m, z_m]])
    starts = corners[np.arange(n_uavs) % 4]
    diag = side_m * math.sqrt(2.0)
    wanted_range = range_factor * diag
    p_max = gamma * wanted_range**2 / mu_f
    # generous budget: enough time to walk the whole box several times
    t_max = (n_waypoints + 2) * diag / speed_mps
    if k_min is None:
        k_min = 0 if n_uavs == 1 else 1
    return Instance(
        start_xyz=starts,
        wp_xyz=wps,
        speed=np.full(n_uavs, speed_mps),
        t_max=np.full(n_uavs, t_max),
        p_max=np.full(n_uavs, p_max),
        k_min=k_min,
        d_min=d_min_m,
        mu_f=mu_f,
        gamma=gamma,
    )


class FleetState:
    """Mutable token-construction state with undo support for search."""

    def __init__(self, instance: Instance):
        self.instance = instance
        a = instance.num_uavs
        self.points: list[list[np.ndarray]] = [[instance.start_xyz[i]] for i in range(a)]
        self.cumtime: list[list[float]] = [[0.0] for _ in range(a)]
        self.routes: list[list[int]] = [[] for _ in range(a)]
        self.current: int | None = None
        self.allocated = np.zeros(instance.num_nodes, dtype=bool)
        self.opened: list[int] = []
        self.tokens: list[int] = []

    @property
    def n_chosen(self) -> int:
        return len(self.tokens)

    def elapsed(self, uav: int) -> float:
        return self.cumtime[uav][-1]

    def end_position(self, uav: int) -> np.ndarray:
        return self.points[uav][-1]

    def apply(self, token: int) -> None:
        inst = self.instance
        a = inst.num_uavs
        self.allocated[token] = True
        self.tokens.append(token)
        if token < a:
            self.current = token
            self.opened.append(token)
        else:
            u = self.current
            wp = token - a
            target = inst.wp_xyz[wp]
            seg = float(np.linalg.norm(target - self.points[u][-1]))
            self.points[u].append(target)
            self.cumtime[u].append(self.cumtime[u][-1] + seg / inst.speed[u])
            self.routes[u].append(wp)

    def extend_uav(self, uav: int, wp: int) -> None:
        """Append a waypoint to an explicit UAV (interleaved construction)."""
        inst = self.instance
        token = inst.num_uavs + wp
        self.allocated[token] = True
        target = inst.wp_xyz[wp]
        seg = float(np.linalg.norm(target - self.points[uav][-1]))
        self.points[uav].append(target)
        self.cumtime[uav].append(self.cumtime[uav][-1] + seg / inst.speed[uav])
        self.routes[uav].append(wp)

    def revert(self) -> None:
        token = self.tokens.pop()
        a = self.instance.num_uavs
        self.allocated[token] = False
        if token < a:
            self.opened.pop()
            self.current = self.opened[-1] if self.opened else None
        else:
            u = self.current
            self.points[u].pop()
            self.cumtime[u].pop()
            self.routes[u].pop()

    def positions_at(self, t: float, override_uav: int | None = None,
                     override_xyz: np.ndarray | None = None) -> np.ndarray:
        """Fleet positions at time ``t`` under current route knowledge."""
        inst = self.instance
        out = np.empty((inst.num_uavs, 3))
        for u in range(inst.num_uavs):
            if u == override_uav:
                out[u] = override_xyz
                continue
            times = self.cumtime[u]
            if t >= times[-1]:
                out[u] = self.points[u][-1]
                continue
            k = int(np.searchsorted(times, t, side="right")) - 1
            t0, t1 = times[k], times[k + 1]
            frac = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            out[u] = self.points[u][k] + frac * (self.points[u][k + 1] - self.points[u][k])
        return out

    def total_length(self) -> float:
        return float(sum((self.cumtime[u][-1]) * self.instance.speed[u]
                         for u in range(self.instance.num_uavs)))

    def pairwise_distance_bound(self) -> float:
        """Sum of all pairwise node distances; a crude route-length bound."""
        xyz = self.instance.node_xyz()
        d = np.linalg.norm(xyz[:, None, :] - xyz[None, :, :], axis=-1)
        return float(d.sum() / 2.0)
