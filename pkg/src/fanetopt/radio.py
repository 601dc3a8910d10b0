"""Link-level physics: free-space path loss, link predicate, Shannon throughput.

All functions accept scalars or numpy arrays and are stateless. The noise
figure is the total received noise power in watts (variance times bandwidth
collapsed into one number), which is how the experiment parameters are
usually quoted (e.g. -110 dBm).
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ValidationError, ZeroDistance

SPEED_OF_LIGHT = 299_792_458.0  # m/s


def dbm_to_watts(dbm: float) -> float:
    """P[W] = 10^((dBm - 30) / 10)."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * math.log10(watts) + 30.0


def mu_f_from_frequency(carrier_hz: float) -> float:
    """Friis free-space constant (lambda / 4 pi)^2 for a given carrier."""
    wavelength = SPEED_OF_LIGHT / carrier_hz
    return (wavelength / (4.0 * math.pi)) ** 2


@dataclass(frozen=True)
class RadioParams:
    """Radio front-end parameters shared by the whole fleet.

    ``mu_f`` defaults to the Friis constant derived from the carrier
    frequency; pass an explicit value to override.
    """

    carrier_frequency_hz: float
    bandwidth_hz: float
    noise_power_w: float
    sensitivity_w: float
    mu_f: float = field(default=0.0)

    def __post_init__(self):
        if self.mu_f == 0.0:
            object.__setattr__(self, "mu_f", mu_f_from_frequency(self.carrier_frequency_hz))
        for name in ("carrier_frequency_hz", "bandwidth_hz", "noise_power_w",
                     "sensitivity_w", "mu_f"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValidationError(f"radio.{name}", f"must be strictly positive, got {value!r}")


def path_loss(d, radio: RadioParams):
    """Dimensionless power gain h = mu_f / d^2 at separation ``d`` meters."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ZeroDistance(f"path loss undefined at d <= 0 (got {d!r})")
    h = radio.mu_f / (d * d)
    return float(h) if h.ndim == 0 else h


def link_up(p_tx, h, gamma):
    """Eq-style link predicate: True iff received power p_tx*h reaches gamma.

    Boundary inclusive: equality counts as a valid link.
    """
    result = np.asarray(p_tx, dtype=float) * np.asarray(h, dtype=float) >= gamma
    return bool(result) if result.ndim == 0 else result


def link_throughput(p_tx, h, radio: RadioParams):
    """Shannon-style rate B * log2(1 + p_tx*h / noise) in bits/s."""
    snr = np.asarray(p_tx, dtype=float) * np.asarray(h, dtype=float) / radio.noise_power_w
    rate = radio.bandwidth_hz * np.log2(1.0 + snr)
    return float(rate) if rate.ndim == 0 else rate
