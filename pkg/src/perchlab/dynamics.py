"""Planar quadrotor rigid-body dynamics with asymmetric motor lag.

World frame: x to the right, z up.  Pitch is the body angle in the x-z
plane, positive nose-up (counterclockwise with x pointing right), zero
when the thrust axis is vertical.  The fore and aft motor pairs of the
physical quadrotor collapse to one thrust state each; both act along
the body-up axis (-sin(pitch), cos(pitch)) at +/- arm_x from the center
of mass, so the thrust differential times arm_x is the pitch moment.

Each thrust state follows df/dt = (f_cmd - f) / tau with tau_up while
thrust builds and tau_down while it decays (spin-up is faster than
spin-down for these motors).  The update uses the exact one-step
exponential solution of that ODE, stable for any step size.

Rigid-body integration is semi-implicit Euler: velocities first, then
positions from the new velocities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class StateCorruptionError(ValueError):
    """A state or command carried a non-finite value."""


@dataclass(frozen=True)
class QuadParams:
    """Physical constants of the planar vehicle.

    max_thrust_per_motor is the limit of one planar thrust state, i.e.
    one fore/aft *pair* of the physical motors, sized so the planar
    thrust-to-weight ratio matches the real vehicle (about 1.6).
    """

    mass: float = 0.0381              # [kg]
    inertia_yy: float = 30.46e-6      # pitch inertia [kg m^2]
    arm_x: float = 0.033              # motor offset from CoM along body x [m]
    max_thrust_per_motor: float = 0.30  # per planar motor pair [N]
    tau_up: float = 0.05              # motor spin-up time constant [s]
    tau_down: float = 0.16            # motor spin-down time constant [s]
    body_halfwidth: float = 0.045     # body box half-extent along body x [m]
    body_halfheight: float = 0.015    # body box half-extent along body z [m]
    prop_radius: float = 0.023        # propeller disk radius [m]
    g: float = 9.81                   # [m/s^2]

    def __post_init__(self) -> None:
        for name in ("mass", "inertia_yy", "arm_x", "max_thrust_per_motor",
                     "tau_up", "tau_down", "g"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0.0:
                raise ValueError(f"QuadParams.{name} must be positive and finite, got {v!r}")
        for name in ("body_halfwidth", "body_halfheight", "prop_radius"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"QuadParams.{name} must be non-negative, got {v!r}")


@dataclass
class QuadState:
    """Rigid-body state plus the two first-order thrust states."""

    t: float = 0.0           # [s]
    x: float = 0.0           # [m]
    z: float = 0.0           # [m]
    pitch: float = 0.0       # [rad], positive nose-up
    vx: float = 0.0          # [m/s]
    vz: float = 0.0          # [m/s]
    pitch_rate: float = 0.0  # [rad/s]
    thrust_fore: float = 0.0  # [N]
    thrust_aft: float = 0.0   # [N]


@dataclass(frozen=True)
class MotorCommand:
    """Commanded thrust per planar motor, clamped on use."""

    thrust_cmd_fore: float  # [N]
    thrust_cmd_aft: float   # [N]


def motor_alpha(dt: float, tau: float) -> float:
    """One-step gain of the exact exponential motor update."""
    return 1.0 - math.exp(-dt / tau)


def _step(x, z, pitch, vx, vz, rate, ff, fa, cf, ca,
          dt, mass, iyy, arm, fmax, a_up, a_dn, g):
    """One physics step on plain floats (hot path, no allocation)."""
    # clamp commands into actuator range
    if cf < 0.0:
        cf = 0.0
    elif cf > fmax:
        cf = fmax
    if ca < 0.0:
        ca = 0.0
    elif ca > fmax:
        ca = fmax
    # exact first-order motor response, direction-dependent tau
    ff += (cf - ff) * (a_up if cf >= ff else a_dn)
    fa += (ca - fa) * (a_up if ca >= fa else a_dn)
    ftot = ff + fa
    sp = math.sin(pitch)
    cp = math.cos(pitch)
    # semi-implicit Euler: velocities first, then positions
    vx += (-ftot * sp / mass) * dt
    vz += (ftot * cp / mass - g) * dt
    rate += ((ff - fa) * arm / iyy) * dt
    x += vx * dt
    z += vz * dt
    pitch += rate * dt
    return x, z, pitch, vx, vz, rate, ff, fa


def step_dynamics(state: QuadState, cmd: MotorCommand, params: QuadParams,
                  dt: float = 1.0e-3) -> QuadState:
    """Advance the vehicle one step of dt seconds.

    Raises StateCorruptionError if the state or command carries a
    non-finite value, ValueError on a non-positive dt.
    """
    if dt <= 0.0 or not math.isfinite(dt):
        raise ValueError(f"dt must be positive and finite, got {dt!r}")
    fields = (state.t, state.x, state.z, state.pitch, state.vx, state.vz,
              state.pitch_rate, state.thrust_fore, state.thrust_aft,
              cmd.thrust_cmd_fore, cmd.thrust_cmd_aft)
    for v in fields:
        if not math.isfinite(v):
            raise StateCorruptionError(f"non-finite state or command value {v!r}")
    a_up = motor_alpha(dt, params.tau_up)
    a_dn = motor_alpha(dt, params.tau_down)
    x, z, pitch, vx, vz, rate, ff, fa = _step(
        state.x, state.z, state.pitch, state.vx, state.vz, state.pitch_rate,
        state.thrust_fore, state.thrust_aft,
        cmd.thrust_cmd_fore, cmd.thrust_cmd_aft,
        dt, params.mass, params.inertia_yy, params.arm_x,
        params.max_thrust_per_motor, a_up, a_dn, params.g)
    return QuadState(state.t + dt, x, z, pitch, vx, vz, rate, ff, fa)


def hover_state(params: QuadParams, x: float = 0.0, z: float = 0.0) -> QuadState:
    """Equilibrium state: level, at rest, thrust balancing weight."""
    f_half = 0.5 * params.mass * params.g
    if f_half > params.max_thrust_per_motor:
        raise ValueError("vehicle cannot hover: weight exceeds available thrust")
    return QuadState(0.0, x, z, 0.0, 0.0, 0.0, 0.0, f_half, f_half)


def mechanical_energy(state: QuadState, params: QuadParams) -> float:
    """Kinetic plus gravitational potential energy, datum at z = 0 [J]."""
    ke = 0.5 * params.mass * (state.vx * state.vx + state.vz * state.vz)
    ke += 0.5 * params.inertia_yy * state.pitch_rate * state.pitch_rate
    return ke + params.mass * params.g * state.z
