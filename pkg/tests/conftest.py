"""Shared fixtures: small scenario builders used across the suite."""

import numpy as np
import pytest

from fanetopt.radio import RadioParams
from fanetopt.scenario import Scenario, UavSpec

GAMMA_W = 1e-10          # -70 dBm
NOISE_W = 1e-14          # -110 dBm
MU_F = 1.693e-5          # 5.8 GHz Friis constant, rounded as usually quoted
BANDWIDTH_HZ = 83.5e6


def make_radio(mu_f: float = MU_F, gamma: float = GAMMA_W) -> RadioParams:
    return RadioParams(
        carrier_frequency_hz=5.8e9,
        bandwidth_hz=BANDWIDTH_HZ,
        noise_power_w=NOISE_W,
        sensitivity_w=gamma,
        mu_f=mu_f,
    )


def make_scenario(
    n_uavs: int = 4,
    k_min: int = 2,
    delta: int = 2,
    p_max_w: float = 1.0,
    e_max_j: float = 1e6,
    t_max_s: float = 100.0,
    speed_mps: float = 10.0,
    n_slots: int = 10,
    d_min_m: float = 0.5,
    l_max_m: float = 1e6,
    waypoints=None,
    start_points=None,
    radio: RadioParams | None = None,
    seed: int = 0,
) -> Scenario:
    """Valid scenario with placeholder geometry unless given explicitly."""
    if start_points is None:
        start_points = [[10.0 * a, 0.0, 50.0] for a in range(n_uavs)]
    if waypoints is None:
        waypoints = [[10.0 * a, 60.0, 50.0] for a in range(n_uavs)]
    uavs = tuple(
        UavSpec(id=a + 1, start_point=min(a + 1, len(start_points)),
                speed_mps=speed_mps, t_max_s=t_max_s,
                p_max_w=p_max_w, e_max_j=e_max_j)
        for a in range(n_uavs)
    )
    return Scenario(
        uavs=uavs,
        start_points=np.asarray(start_points, dtype=float),
        waypoints=np.asarray(waypoints, dtype=float),
        radio=radio or make_radio(),
        k_min=k_min,
        delta=delta,
        l_max_m=l_max_m,
        d_min_m=d_min_m,
        n_slots=n_slots,
        seed=seed,
    )


def random_walk_positions(rng: np.random.Generator, n_uavs: int, n_slots: int,
                          side_m: float = 240.0, z_m: float = 50.0,
                          step_m: float = 15.0) -> np.ndarray:
    """Random fleet motion inside a box small enough to stay in radio range."""
    pos = np.empty((n_uavs, n_slots + 1, 3))
    pos[:, 0, :2] = rng.uniform(0.0, side_m, size=(n_uavs, 2))
    pos[:, 0, 2] = z_m + rng.uniform(-5.0, 5.0, size=n_uavs)
    for n in range(n_slots):
        step = rng.uniform(-step_m, step_m, size=(n_uavs, 3)) * np.array([1.0, 1.0, 0.2])
        nxt = pos[:, n, :] + step
        nxt[:, 0] = np.clip(nxt[:, 0], 0.0, side_m)
        nxt[:, 1] = np.clip(nxt[:, 1], 0.0, side_m)
        pos[:, n + 1, :] = nxt
    return pos


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
