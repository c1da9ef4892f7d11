"""Landing reward kernel: a weighted sum of four bounded terms.

    r_d     closeness of the closest CoM approach to the ceiling
    r_tau   closeness of the trigger's sensed tau to the ideal 0.2 s
    r_theta impact-angle shaping, saturating for |pitch| >= 120 deg
    r_legs  0 / 0.5 / 1.0 for 0 / 2 / 4 feet, cut to a third on any
            body or propeller contact

Weights (0.05, 0.1, 0.2, 0.65) sum to one, so the total lives in
[0, 1].  The leg term dominates, the rest are dense shaping that gives
the search a gradient long before any foot ever touches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .contact import LandingOutcome


@dataclass(frozen=True)
class RewardConfig:
    c0: float = 10.0            # distance term clip [1/m]
    c1: float = 20.0            # tau term clip [1/s]
    tau_ideal: float = 0.2      # sensed tau target at trigger [s]
    theta_full: float = 120.0   # impact angle for full angle credit [deg]
    w_d: float = 0.05
    w_tau: float = 0.1
    w_theta: float = 0.2
    w_legs: float = 0.65


@dataclass(frozen=True)
class RewardBreakdown:
    r_d: float
    r_tau: float
    r_theta: float
    r_legs: float
    penalty_applied: bool
    total: float


def _clip_unit(value: float, cmax: float) -> float:
    """clip(value, 0, cmax) / cmax."""
    if value < 0.0:
        return 0.0
    if value > cmax:
        return 1.0
    return value / cmax


def compute_reward(outcome: LandingOutcome, cfg: RewardConfig = RewardConfig()) -> RewardBreakdown:
    """Score one rollout from its landing outcome summary."""
    d = abs(outcome.min_ceiling_distance)
    r_d = 1.0 if d == 0.0 else _clip_unit(1.0 / d, cfg.c0)

    if outcome.trigger_tau is None:
        r_tau = 0.0
    else:
        err = abs(outcome.trigger_tau - cfg.tau_ideal)
        r_tau = 1.0 if err == 0.0 else _clip_unit(1.0 / err, cfg.c1)

    if outcome.impact_angle is None:
        r_theta = 0.0
    else:
        a = abs(outcome.impact_angle)
        if a > 180.0:
            a = math.fmod(a, 360.0)
            if a > 180.0:
                a = 360.0 - a
        r_theta = 1.0 if a >= cfg.theta_full else a / cfg.theta_full

    if outcome.n_legs >= 4:
        r_legs = 1.0
    elif outcome.n_legs >= 2:
        r_legs = 0.5
    else:
        r_legs = 0.0
    penalty = bool(outcome.body_or_prop_contact)
    if penalty:
        r_legs /= 3.0

    total = cfg.w_d * r_d + cfg.w_tau * r_tau + cfg.w_theta * r_theta + cfg.w_legs * r_legs
    return RewardBreakdown(r_d, r_tau, r_theta, r_legs, penalty, total)
