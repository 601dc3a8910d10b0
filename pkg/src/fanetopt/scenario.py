"""Mission scenario definition, validation, file I/O and synthesis.

A scenario bundles the fleet, the radio parameters, the coverage waypoints
and the mission limits. Node ids are 1-based: start points take ids
``1..S``, waypoints ``S+1..S+W`` (row-major over the generating grid).

Scenario files are single JSON documents with top-level keys ``uavs``,
``start_points``, ``waypoints`` (or ``terrain`` for generation), ``radio``,
``limits`` and ``seed``. Scalar physical quantities carry unit suffixes in
their key names (``p_max_dbm`` / ``p_max_w``, ``l_max_m``, ...); coordinate
triples are meters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DegenerateTerrain, ParseError, ValidationError
from .radio import RadioParams, dbm_to_watts


@dataclass(frozen=True)
class UavSpec:
    """One UAV: start point id (in 1..S), kinematic and radio limits."""

    id: int
    start_point: int
    speed_mps: float
    t_max_s: float
    p_max_w: float
    e_max_j: float

    def __post_init__(self):
        for name in ("speed_mps", "t_max_s", "p_max_w", "e_max_j"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValidationError(f"uavs[{self.id}].{name}",
                                      f"must be strictly positive, got {value!r}")


@dataclass(frozen=True)
class Scenario:
    """Immutable mission description. All arrays are read-only."""

    uavs: tuple[UavSpec, ...]
    start_points: np.ndarray  # (S, 3) m
    waypoints: np.ndarray     # (W, 3) m
    radio: RadioParams
    k_min: int
    delta: int
    l_max_m: float
    d_min_m: float
    n_slots: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "uavs", tuple(self.uavs))
        for name in ("start_points", "waypoints"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 2 or arr.shape[1] != 3:
                raise ValidationError(name, f"expected (n, 3) coordinates, got shape {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(name, "coordinates must be finite")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        self._validate()

    def _validate(self):
        if len(self.uavs) < 2:
            raise ValidationError("uavs", f"need at least 2 UAVs, got {len(self.uavs)}")
        if len(self.waypoints) < 1:
            raise ValidationError("waypoints", "need at least one waypoint")
        s = len(self.start_points)
        for i, uav in enumerate(self.uavs, start=1):
            if uav.id != i:
                raise ValidationError(f"uavs[{i}].id", f"ids must be sequential 1..A, got {uav.id}")
            if not (1 <= uav.start_point <= s):
                raise ValidationError(f"uavs[{i}].start_point",
                                      f"must index a start point in 1..{s}, got {uav.start_point}")
        a = len(self.uavs)
        if self.k_min < 1:
            raise ValidationError("limits.k_min", f"must be >= 1, got {self.k_min}")
        if self.k_min > a - 1:
            raise ValidationError("limits.k_min",
                                  f"must be <= A-1 = {a - 1}, got {self.k_min}")
        if self.delta < 0:
            raise ValidationError("limits.delta", f"must be >= 0, got {self.delta}")
        if self.n_slots < 1:
            raise ValidationError("limits.n_slots", f"must be >= 1, got {self.n_slots}")
        if not (np.isfinite(self.l_max_m) and self.l_max_m > 0):
            raise ValidationError("limits.l_max_m", f"must be strictly positive, got {self.l_max_m}")
        if not (np.isfinite(self.d_min_m) and self.d_min_m >= 0):
            raise ValidationError("limits.d_min_m", f"must be non-negative, got {self.d_min_m}")

    # Convenience accessors -------------------------------------------------

    @property
    def num_uavs(self) -> int:
        return len(self.uavs)

    @property
    def num_starts(self) -> int:
        return len(self.start_points)

    @property
    def num_waypoints(self) -> int:
        return len(self.waypoints)

    def points(self) -> np.ndarray:
        """All node coordinates in id order: starts 1..S then waypoints."""
        return np.vstack([self.start_points, self.waypoints])

    def p_max_w(self) -> np.ndarray:
        return np.array([u.p_max_w for u in self.uavs])

    def e_max_j(self) -> np.ndarray:
        return np.array([u.e_max_j for u in self.uavs])

    def speeds(self) -> np.ndarray:
        return np.array([u.speed_mps for u in self.uavs])

    def t_max_s(self) -> np.ndarray:
        return np.array([u.t_max_s for u in self.uavs])

    @property
    def slot_duration_s(self) -> float:
        """Time slot length: max flight-time budget divided into n_slots."""
        return max(u.t_max_s for u in self.uavs) / self.n_slots


@dataclass(frozen=True)
class TerrainGrid:
    """Regular elevation grid plus the camera geometry used for coverage.

    ``elevation_m[i, j]`` is the surface height at ``x = i * extent_x / (nx-1)``,
    ``y = j * extent_y / (ny-1)``.
    """

    extent_x_m: float
    extent_y_m: float
    elevation_m: np.ndarray
    cam_footprint_length_m: float
    cam_footprint_width_m: float
    overlap_h: float
    overlap_v: float
    standoff_m: float

    def __post_init__(self):
        elev = np.array(self.elevation_m, dtype=float)
        elev.setflags(write=False)
        object.__setattr__(self, "elevation_m", elev)
        if not (0.0 < self.overlap_h < 1.0):
            raise ValidationError("terrain.overlap_h", f"must lie in (0,1), got {self.overlap_h}")
        if not (0.0 < self.overlap_v < 1.0):
            raise ValidationError("terrain.overlap_v", f"must lie in (0,1), got {self.overlap_v}")
        if not (self.standoff_m > 0):
            raise ValidationError("terrain.standoff_m", f"must be > 0, got {self.standoff_m}")
        for name in ("cam_footprint_length_m", "cam_footprint_width_m"):
            if not (getattr(self, name) > 0):
                raise ValidationError(f"terrain.{name}", "must be > 0")

    def grid_axes(self) -> tuple[np.ndarray, np.ndarray]:
        nx, ny = self.elevation_m.shape
        return (np.linspace(0.0, self.extent_x_m, nx),
                np.linspace(0.0, self.extent_y_m, ny))


def generate_waypoints(terrain: TerrainGrid) -> np.ndarray:
    """Coverage waypoints at ``standoff`` along the local surface normal.

    Camera footprints overlap by (overlap_h, overlap_v), so grid spacing is
    ``(1-overlap_h) * L_cam`` along x and ``(1-overlap_v) * W_cam`` along y.
    Waypoints are placed over footprint cell centers, ordered row-major
    (increasing y rows, increasing x within a row).
    """
    elev = terrain.elevation_m
    if elev.ndim != 2 or elev.shape[0] < 2 or elev.shape[1] < 2:
        raise DegenerateTerrain(f"elevation grid must be at least 2x2, got shape {elev.shape}")
    if terrain.extent_x_m <= 0 or terrain.extent_y_m <= 0:
        raise DegenerateTerrain("terrain extent must be positive in both axes")
    if not np.all(np.isfinite(elev)):
        raise DegenerateTerrain("elevation samples must be finite")

    xs, ys = terrain.grid_axes()
    gx, gy = np.gradient(elev, xs, ys)  # central differences, one-sided at edges
    if not (np.all(np.isfinite(gx)) and np.all(np.isfinite(gy))):
        raise DegenerateTerrain("surface normal undefined (zero-area cell)")
    z_at = RegularGridInterpolator((xs, ys), elev)
    gx_at = RegularGridInterpolator((xs, ys), gx)
    gy_at = RegularGridInterpolator((xs, ys), gy)

    dx = (1.0 - terrain.overlap_h) * terrain.cam_footprint_length_m
    dy = (1.0 - terrain.overlap_v) * terrain.cam_footprint_width_m
    # tiny relative slack so near-exact divisors do not gain a spurious cell
    n_x = max(1, math.ceil(terrain.extent_x_m / dx * (1.0 - 1e-8)))
    n_y = max(1, math.ceil(terrain.extent_y_m / dy * (1.0 - 1e-8)))
    cx = np.minimum((np.arange(n_x) + 0.5) * dx, terrain.extent_x_m)
    cy = np.minimum((np.arange(n_y) + 0.5) * dy, terrain.extent_y_m)

    gx_grid, gy_grid = np.meshgrid(cx, cy, indexing="xy")  # row-major: y rows
    centers = np.stack([gx_grid.ravel(), gy_grid.ravel()], axis=1)
    feet = np.column_stack([centers, z_at(centers)])
    normals = np.column_stack([-gx_at(centers), -gy_at(centers),
                               np.ones(len(centers))])
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return feet + terrain.standoff_m * normals


# Scenario file I/O ---------------------------------------------------------


def _power_watts(d: dict, base: str, path: str) -> float:
    w_key, dbm_key = f"{base}_w", f"{base}_dbm"
    if w_key in d and dbm_key in d:
        raise ValidationError(f"{path}.{base}", f"give exactly one of {w_key} / {dbm_key}")
    if w_key in d:
        return float(d[w_key])
    if dbm_key in d:
        return dbm_to_watts(float(d[dbm_key]))
    raise ValidationError(f"{path}.{base}", f"missing: need {w_key} or {dbm_key}")


def _require(d: dict, key: str, path: str):
    if key not in d:
        raise ValidationError(f"{path}.{key}" if path else key, "missing required key")
    return d[key]


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ParseError(f"scenario document must be a JSON object, got {type(data).__name__}")
    radio_d = _require(data, "radio", "")
    radio = RadioParams(
        carrier_frequency_hz=float(_require(radio_d, "carrier_frequency_hz", "radio")),
        bandwidth_hz=float(_require(radio_d, "bandwidth_hz", "radio")),
        noise_power_w=_power_watts(radio_d, "noise_power", "radio"),
        sensitivity_w=_power_watts(radio_d, "sensitivity", "radio"),
        mu_f=float(radio_d["mu_f"]) if radio_d.get("mu_f") is not None else 0.0,
    )
    limits = _require(data, "limits", "")
    start_points = np.array(_require(data, "start_points", ""), dtype=float)

    if "waypoints" in data:
        waypoints = np.array(data["waypoints"], dtype=float)
    elif "terrain" in data:
        t = data["terrain"]
        terrain = TerrainGrid(
            extent_x_m=float(_require(t, "extent_x_m", "terrain")),
            extent_y_m=float(_require(t, "extent_y_m", "terrain")),
            elevation_m=np.array(_require(t, "elevation_m", "terrain"), dtype=float),
            cam_footprint_length_m=float(_require(t, "cam_footprint_length_m", "terrain")),
            cam_footprint_width_m=float(_require(t, "cam_footprint_width_m", "terrain")),
            overlap_h=float(_require(t, "overlap_h", "terrain")),
            overlap_v=float(_require(t, "overlap_v", "terrain")),
            standoff_m=float(_require(t, "standoff_m", "terrain")),
        )
        waypoints = generate_waypoints(terrain)
    else:
        raise ValidationError("waypoints", "missing: need waypoints or terrain")

    uavs = []
    for i, u in enumerate(_require(data, "uavs", ""), start=1):
        uavs.append(UavSpec(
            id=int(u.get("id", i)),
            start_point=int(_require(u, "start_point", f"uavs[{i}]")),
            speed_mps=float(_require(u, "speed_mps", f"uavs[{i}]")),
            t_max_s=float(_require(u, "t_max_s", f"uavs[{i}]")),
            p_max_w=_power_watts(u, "p_max", f"uavs[{i}]"),
            e_max_j=float(_require(u, "e_max_j", f"uavs[{i}]")),
        ))

    return Scenario(
        uavs=tuple(uavs),
        start_points=start_points,
        waypoints=waypoints,
        radio=radio,
        k_min=int(_require(limits, "k_min", "limits")),
        delta=int(_require(limits, "delta", "limits")),
        l_max_m=float(_require(limits, "l_max_m", "limits")),
        d_min_m=float(_require(limits, "d_min_m", "limits")),
        n_slots=int(_require(limits, "n_slots", "limits")),
        seed=int(data.get("seed", 0)),
    )


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "seed": scenario.seed,
        "start_points": [list(p) for p in scenario.start_points.tolist()],
        "waypoints": [list(p) for p in scenario.waypoints.tolist()],
        "radio": {
            "carrier_frequency_hz": scenario.radio.carrier_frequency_hz,
            "bandwidth_hz": scenario.radio.bandwidth_hz,
            "noise_power_w": scenario.radio.noise_power_w,
            "sensitivity_w": scenario.radio.sensitivity_w,
            "mu_f": scenario.radio.mu_f,
        },
        "limits": {
            "k_min": scenario.k_min,
            "delta": scenario.delta,
            "l_max_m": scenario.l_max_m,
            "d_min_m": scenario.d_min_m,
            "n_slots": scenario.n_slots,
        },
        "uavs": [
            {
                "id": u.id,
                "start_point": u.start_point,
                "speed_mps": u.speed_mps,
                "t_max_s": u.t_max_s,
                "p_max_w": u.p_max_w,
                "e_max_j": u.e_max_j,
            }
            for u in scenario.uavs
        ],
    }


def load_scenario(path) -> Scenario:
    try:
        with open(path) as f:
            data = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ParseError(f"{path}: {e}") from e
    return scenario_from_dict(data)


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w") as f:
        json.dump(scenario_to_dict(scenario), f, indent=2, sort_keys=True)
        f.write("\n")


# Synthetic scenarios --------------------------------------------------------


def synthetic_scenario(
    extent_m: float = 500.0,
    n_uavs: int = 4,
    n_slots: int = 50,
    k_min: int = 2,
    delta: int = 2,
    altitude_m: float = 50.0,
    wp_per_uav: int = 4,
    speed_mps: float = 10.0,
    p_max_dbm: float = 30.0,
    e_max_j: float = 60.0,
    gamma_dbm: float = -70.0,
    noise_dbm: float = -110.0,
    bandwidth_hz: float = 83.5e6,
    d_min_m: float = 5.0,
    seed: int = 0,
) -> Scenario:
    """Square coverage scenario: per-UAV waypoint clusters over a flat area.

    Each UAV owns a sector of the square with a small waypoint grid inside,
    and all starts sit near the center, which keeps the fleet mutually in
    radio range so the degree floor stays feasible along reasonable plans.
    """
    rng = np.random.default_rng(seed)
    radio = RadioParams(
        carrier_frequency_hz=5.8e9,
        bandwidth_hz=bandwidth_hz,
        noise_power_w=dbm_to_watts(noise_dbm),
        sensitivity_w=dbm_to_watts(gamma_dbm),
    )
    # Sector centers in tight pairs spread around a ring: heterogeneous
    # link distances (short within a pair, long across) are what separate
    # degree-floor topologies from bare spanning trees
    center = extent_m / 2.0
    ring = extent_m / 4.0
    n_pairs = (n_uavs + 1) // 2
    base = 2.0 * np.pi * (np.arange(n_uavs) // 2) / n_pairs
    offset = np.where(np.arange(n_uavs) % 2 == 0, -0.25, 0.25)
    angles = base + offset
    sector_centers = np.stack([
        center + ring * np.cos(angles),
        center + ring * np.sin(angles),
        np.full(n_uavs, altitude_m),
    ], axis=1)

    side = max(1, math.ceil(math.sqrt(wp_per_uav)))
    spacing = extent_m / 10.0
    waypoints = []
    for c in sector_centers:
        cells = [(ix, iy) for iy in range(side) for ix in range(side)][:wp_per_uav]
        for ix, iy in cells:
            offset = np.array([
                (ix - (side - 1) / 2.0) * spacing,
                (iy - (side - 1) / 2.0) * spacing,
                0.0,
            ])
            jitter = rng.uniform(-spacing / 8.0, spacing / 8.0, size=3) * np.array([1, 1, 0])
            waypoints.append(c + offset + jitter)
    waypoints = np.array(waypoints)

    # Starts on a tight ring near the center, one per UAV.
    start_ring = extent_m / 12.0
    start_points = np.stack([
        center + start_ring * np.cos(angles),
        center + start_ring * np.sin(angles),
        np.full(n_uavs, altitude_m),
    ], axis=1)

    t_max = 1.6 * (len(waypoints) / n_uavs * spacing * 2.0 + extent_m) / speed_mps
    uavs = tuple(
        UavSpec(id=a + 1, start_point=a + 1, speed_mps=speed_mps, t_max_s=t_max,
                p_max_w=dbm_to_watts(p_max_dbm), e_max_j=e_max_j)
        for a in range(n_uavs)
    )
    return Scenario(
        uavs=uavs,
        start_points=start_points,
        waypoints=waypoints,
        radio=radio,
        k_min=k_min,
        delta=delta,
        l_max_m=n_uavs * t_max * speed_mps,
        d_min_m=d_min_m,
        n_slots=n_slots,
        seed=seed,
    )
