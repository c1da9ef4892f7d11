"""Approach tracking and the open-loop flip maneuver.

The approach controller is a cascade: a proportional velocity loop with
gravity feedforward yields a desired world-frame thrust vector, whose
direction gives the pitch setpoint for a PD attitude loop.  Commands
update at the sensor tick (100 Hz) and are held between ticks, like the
real firmware.

The flip is open loop: the aft pair is commanded to zero and the fore
pair to the thrust that realizes the requested body moment a_rot about
the pitch axis.  The aft thrust then decays under tau_down while the
fore thrust builds under tau_up, so the net moment sweeps up over a few
tens of milliseconds before settling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dynamics import MotorCommand, QuadParams, QuadState


@dataclass(frozen=True)
class ApproachCondition:
    """Commanded constant-velocity ray toward the ceiling.

    angle_deg is measured from horizontal: 90 is straight up.  The
    vehicle starts from hover at the origin with the ceiling plane at
    z = ceiling_height.
    """

    speed: float                  # [m/s]
    angle_deg: float              # [deg] from horizontal
    ceiling_height: float = 3.0   # start-to-ceiling distance [m]

    def __post_init__(self) -> None:
        if not (0.5 <= self.speed <= 5.0):
            raise ValueError(f"ApproachCondition.speed must be in [0.5, 5.0] m/s, got {self.speed!r}")
        if not (0.0 < self.angle_deg <= 90.0):
            raise ValueError(f"ApproachCondition.angle_deg must be in (0, 90] deg, got {self.angle_deg!r}")
        if not (self.ceiling_height > 0.0 and math.isfinite(self.ceiling_height)):
            raise ValueError(f"ApproachCondition.ceiling_height must be positive, got {self.ceiling_height!r}")

    @property
    def vx(self) -> float:
        return self.speed * math.cos(math.radians(self.angle_deg))

    @property
    def vz(self) -> float:
        return self.speed * math.sin(math.radians(self.angle_deg))


@dataclass(frozen=True)
class ControllerGains:
    """Approach controller gains (defaults tuned for the stock vehicle)."""

    kv: float = 3.0          # velocity loop P gain [1/s]
    kp_att: float = 160.0    # attitude P gain [1/s^2]
    kd_att: float = 45.0     # attitude D gain [1/s]
    tilt_limit: float = 1.2  # pitch setpoint magnitude limit [rad]
    accel_limit: float = 4.0  # commanded acceleration bound [m/s^2]


def _wrap_pi(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def track_trajectory(state: QuadState, cond: ApproachCondition, params: QuadParams,
                     gains: ControllerGains = ControllerGains()) -> MotorCommand:
    """Motor commands that drive the vehicle onto the commanded velocity ray."""
    m = params.mass
    g = params.g
    # velocity P loop with gravity feedforward -> desired force vector;
    # the acceleration bound keeps the run-up out of thrust saturation,
    # which would otherwise limit-cycle the attitude cascade
    ax = gains.kv * (cond.vx - state.vx)
    az = gains.kv * (cond.vz - state.vz)
    a_mag = math.hypot(ax, az)
    if a_mag > gains.accel_limit:
        s = gains.accel_limit / a_mag
        ax *= s
        az *= s
    fx = m * ax
    fz = m * (az + g)
    # thrust cannot pull down; keep the attitude setpoint well defined
    fz_min = 0.15 * m * g
    if fz < fz_min:
        fz = fz_min
    pitch_des = math.atan2(-fx, fz)
    if pitch_des > gains.tilt_limit:
        pitch_des = gains.tilt_limit
    elif pitch_des < -gains.tilt_limit:
        pitch_des = -gains.tilt_limit
    # project the desired force onto the current thrust axis
    f_tot = -fx * math.sin(state.pitch) + fz * math.cos(state.pitch)
    if f_tot < 0.0:
        f_tot = 0.0
    # PD attitude loop -> pitch moment -> differential thrust
    moment = params.inertia_yy * (gains.kp_att * _wrap_pi(pitch_des - state.pitch)
                                  - gains.kd_att * state.pitch_rate)
    diff = 0.5 * moment / params.arm_x
    return MotorCommand(0.5 * f_tot + diff, 0.5 * f_tot - diff)


def a_rot_max(params: QuadParams) -> float:
    """Largest realizable flip moment [N mm]: fore pair saturated, aft at zero."""
    return params.arm_x * params.max_thrust_per_motor * 1.0e3


def execute_flip(a_rot: float, params: QuadParams) -> MotorCommand:
    """Open-loop flip command for a body moment a_rot [N mm], held until
    ceiling contact or timeout.  The realizable moment saturates at
    a_rot_max(params); callers can compare against that for clamping."""
    if a_rot < 0.0:
        a_rot = 0.0
    f_fore = a_rot * 1.0e-3 / params.arm_x
    if f_fore > params.max_thrust_per_motor:
        f_fore = params.max_thrust_per_motor
    return MotorCommand(f_fore, 0.0)
