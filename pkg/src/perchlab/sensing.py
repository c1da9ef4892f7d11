"""Ceiling-relative optical-flow sensing.

The trigger policy sees the augmented optical-flow triple
    tau     = d_ceil / v_z      time to contact [s]
    theta_x = v_x / d_ceil      transverse flow rate [1/s]
    d_ceil  = ceiling_z - z     distance to the ceiling plane [m]
emulated from vehicle state the way a mocap-driven bench emulates the
camera.  Divisors are clamped (vz_min, d_min) so hover and descent give
finite readings, and tau saturates at tau_clamp.  The simulation engine
samples this at the 100 Hz sensor tick and holds between ticks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import QuadState


@dataclass(frozen=True)
class SensorConfig:
    vz_min: float = 0.01       # ascent-rate clamp [m/s]
    d_min: float = 0.01        # distance clamp [m]
    tau_clamp: float = 5.0     # tau saturation [s]
    tick: float = 0.01         # sample period [s]
    noise_tau: float = 0.0     # optional zero-mean Gaussian sigma per channel
    noise_theta_x: float = 0.0
    noise_d: float = 0.0

    def __post_init__(self) -> None:
        for name in ("vz_min", "d_min", "tau_clamp", "tick"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"SensorConfig.{name} must be positive, got {v!r}")
        for name in ("noise_tau", "noise_theta_x", "noise_d"):
            v = getattr(self, name)
            if v < 0.0 or not math.isfinite(v):
                raise ValueError(f"SensorConfig.{name} must be non-negative, got {v!r}")

    @property
    def has_noise(self) -> bool:
        return self.noise_tau > 0.0 or self.noise_theta_x > 0.0 or self.noise_d > 0.0


@dataclass(frozen=True)
class SensoryState:
    """One augmented optical-flow sample."""

    tau: float      # [s]
    theta_x: float  # [1/s]
    d_ceil: float   # [m]


def sense(state: QuadState, ceiling_z: float,
          cfg: SensorConfig = SensorConfig(),
          rng: np.random.Generator | None = None) -> SensoryState:
    """Emulated optical-flow reading for a vehicle below the ceiling."""
    d = ceiling_z - state.z
    if d < 0.0:
        d = 0.0
    vz = state.vz if state.vz > cfg.vz_min else cfg.vz_min
    tau = d / vz
    if tau > cfg.tau_clamp:
        tau = cfg.tau_clamp
    theta_x = state.vx / (d if d > cfg.d_min else cfg.d_min)
    if rng is not None and cfg.has_noise:
        if cfg.noise_tau > 0.0:
            tau += cfg.noise_tau * rng.standard_normal()
            tau = min(max(tau, 0.0), cfg.tau_clamp)
        if cfg.noise_theta_x > 0.0:
            theta_x += cfg.noise_theta_x * rng.standard_normal()
        if cfg.noise_d > 0.0:
            d = max(d + cfg.noise_d * rng.standard_normal(), 0.0)
    return SensoryState(tau, theta_x, d)
