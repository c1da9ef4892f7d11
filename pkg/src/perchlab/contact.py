"""Ceiling contact: adhesion, pinned swing dynamics, and classification.

A foot reaching the ceiling adheres and becomes a pin joint.  From then
on the vehicle is a two-link chain hanging from the pin: the massless
leg link (angle lam, measured from world-down at the pin) and the body
(pitch), coupled at the hip by the torsional spring-damper.  The pinned
equations of motion come from the Lagrangian in (lam, pitch), so the
pin constraint is exact by construction rather than enforced by
penalty forces.

At pin formation the free-flight momentum collapses onto the two
remaining coordinates through an impulsive constraint force along the
leg link (the soft hip spring cannot carry an impulsive torque), which
is the momentum-transfer step that converts approach velocity into
swing rotation.

Landing classes:
    OptimalFourLeg            both pairs attached, clean
    SubOptimalFourLegContact  both pairs attached, body or prop grazed
    SubOptimalTwoLeg          one pair attached at rest or timeout
    FailureBodyOnly           body-first contact or no adhesion at all
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .dynamics import QuadParams
from .legs import LegConfig, hard_body_points


class ConstraintDriftError(RuntimeError):
    """The pinned foot moved away from its attach point."""


class Phase(Enum):
    FREE = "Free"
    FORE_ATTACHED = "ForeAttached"
    FOUR_LEGGED = "FourLegged"
    BODY_CONTACT = "BodyContact"
    TWO_LEGGED_REST = "TwoLeggedRest"


class LandingClass(Enum):
    OPTIMAL_FOUR_LEG = "OptimalFourLeg"
    SUBOPTIMAL_FOUR_LEG_CONTACT = "SubOptimalFourLegContact"
    SUBOPTIMAL_TWO_LEG = "SubOptimalTwoLeg"
    FAILURE_BODY_ONLY = "FailureBodyOnly"


@dataclass(frozen=True)
class ContactEvent:
    """First ceiling touch found in a step, deepest element first."""

    element: str          # 'foot_fore' | 'foot_hind' | 'body' | 'prop'
    point: tuple[float, float]  # world [m]
    penetration: float    # depth past the touch plane [m]
    pitch_deg: float      # wrapped body pitch at the event [deg]


@dataclass
class ContactState:
    phase: Phase = Phase.FREE
    fore_pivot: tuple[float, float] | None = None  # pin world point [m]
    pivot_side: int = 0            # +1 fore pair pinned, -1 hind, 0 none
    hind_attached: bool = False    # the non-pinned pair reached the ceiling
    hinge_deflections: tuple[float, float] = (0.0, 0.0)  # (fore, hind) [rad]
    body_or_prop_contact: bool = False
    first_contact_pitch: float | None = None  # wrapped [deg]


@dataclass(frozen=True)
class LandingOutcome:
    landing_class: LandingClass
    n_legs: int                    # 0, 2, or 4 feet attached
    body_or_prop_contact: bool
    impact_angle: float | None     # |pitch| at first ceiling touch [deg]
    min_ceiling_distance: float    # closest CoM approach [m]
    trigger_tau: float | None      # sensed tau when the flip fired [s]

    def to_json_dict(self) -> dict:
        return {
            "class": self.landing_class.value,
            "n_legs": self.n_legs,
            "body_or_prop_contact": self.body_or_prop_contact,
            "impact_angle": self.impact_angle,
            "min_ceiling_distance": self.min_ceiling_distance,
            "trigger_tau": self.trigger_tau,
        }


def wrap_pitch_deg(pitch_rad: float) -> float:
    """Wrap pitch to (-180, 180] degrees."""
    d = math.fmod(math.degrees(pitch_rad) + 180.0, 360.0)
    if d <= 0.0:
        d += 360.0
    return d - 180.0


def foot_world(x: float, z: float, pitch: float, leg: LegConfig, side: int) -> tuple[float, float]:
    """World position of a foot with the hinge at its rest angle."""
    px, pz = leg.foot_body_point(side)
    cp = math.cos(pitch)
    sp = math.sin(pitch)
    return x + px * cp - pz * sp, z + px * sp + pz * cp


def detect_contact(x: float, z: float, pitch: float, leg: LegConfig,
                   params: QuadParams, ceiling_z: float) -> ContactEvent | None:
    """Deepest ceiling contact among feet (within the adhesion band),
    body corners, and propeller points, or None."""
    cp = math.cos(pitch)
    sp = math.sin(pitch)
    tol = leg.foot_attach_tolerance
    best: tuple[float, str, float, float] | None = None
    for side, name in ((+1, "foot_fore"), (-1, "foot_hind")):
        px, pz = leg.foot_body_point(side)
        wx = x + px * cp - pz * sp
        wz = z + px * sp + pz * cp
        pen = wz - (ceiling_z - tol)
        if pen >= 0.0 and (best is None or wz > best[0]):
            best = (wz, name, wx, wz)
    for name, px, pz in hard_body_points(params):
        wx = x + px * cp - pz * sp
        wz = z + px * sp + pz * cp
        if wz >= ceiling_z and (best is None or wz > best[0]):
            best = (wz, name, wx, wz)
    if best is None:
        return None
    wz, name, wx, _ = best
    plane = ceiling_z - tol if name.startswith("foot") else ceiling_z
    return ContactEvent(name, (wx, wz), wz - plane, wrap_pitch_deg(pitch))


# --- pinned swing -----------------------------------------------------------


@dataclass
class SwingState:
    """Coordinates of the pinned two-link chain."""

    pin: tuple[float, float]   # fixed foot point, world [m]
    side: int                  # +1 fore pair pinned, -1 hind
    lam: float                 # leg link angle from world-down at the pin [rad]
    lam_dot: float             # [rad/s]
    pitch: float               # body pitch [rad]
    pitch_rate: float          # [rad/s]

    def hip(self, leg: LegConfig) -> tuple[float, float]:
        l_m = leg.length_m
        return (self.pin[0] - l_m * math.sin(self.lam),
                self.pin[1] + l_m * math.cos(self.lam))

    def com(self, leg: LegConfig) -> tuple[float, float]:
        hx, hz = self.hip(leg)
        b = self.side * leg.mount_x
        return hx - b * math.cos(self.pitch), hz - b * math.sin(self.pitch)

    def com_velocity(self, leg: LegConfig) -> tuple[float, float]:
        l_m = leg.length_m
        b = self.side * leg.mount_x
        vx = -l_m * self.lam_dot * math.cos(self.lam) + b * self.pitch_rate * math.sin(self.pitch)
        vz = -l_m * self.lam_dot * math.sin(self.lam) - b * self.pitch_rate * math.cos(self.pitch)
        return vx, vz

    def deflection(self, leg: LegConfig) -> float:
        """Hip hinge deflection from the rest splay [rad]."""
        return self.lam - self.pitch - self.side * leg.psi_rad

    def foot_position(self, leg: LegConfig) -> tuple[float, float]:
        """Pinned foot recomputed from the hip, for drift checks."""
        hx, hz = self.hip(leg)
        l_m = leg.length_m
        return hx + l_m * math.sin(self.lam), hz - l_m * math.cos(self.lam)

    def other_foot(self, leg: LegConfig) -> tuple[float, float]:
        """The non-pinned pair's foot, hinge at rest, world [m]."""
        cx, cz = self.com(leg)
        b = self.side * leg.mount_x
        ang = self.pitch - self.side * leg.psi_rad
        l_m = leg.length_m
        return (cx - b * math.cos(self.pitch) + l_m * math.sin(ang),
                cz - b * math.sin(self.pitch) - l_m * math.cos(ang))

    def kinetic_energy(self, leg: LegConfig, params: QuadParams) -> float:
        vx, vz = self.com_velocity(leg)
        return (0.5 * params.mass * (vx * vx + vz * vz)
                + 0.5 * params.inertia_yy * self.pitch_rate * self.pitch_rate)


def pin_impact(x: float, z: float, pitch: float, vx: float, vz: float,
               pitch_rate: float, pin: tuple[float, float], side: int,
               leg: LegConfig, params: QuadParams) -> SwingState:
    """Resolve the instant of adhesion: an impulsive force along the leg
    link removes the hip velocity component toward the pin and converts
    the rest of the approach momentum into swing motion."""
    m = params.mass
    iyy = params.inertia_yy
    lam0 = pitch + side * leg.psi_rad
    b = side * leg.mount_x
    phx = b * math.cos(pitch)          # hip - com, world
    phz = b * math.sin(pitch)
    hx, hz = x + phx, z + phz
    ex = (hx - pin[0]) / leg.length_m  # unit along link, pin -> hip
    ez = (hz - pin[1]) / leg.length_m
    n = math.hypot(ex, ez)
    ex /= n
    ez /= n
    gam = phx * ez - phz * ex
    j = -((vx * ex + vz * ez) + pitch_rate * gam) / (1.0 / m + gam * gam / iyy)
    vx += j * ex / m
    vz += j * ez / m
    w = pitch_rate + j * gam / iyy
    # hip velocity -> leg link angular rate
    hvx = vx - w * phz
    hvz = vz + w * phx
    lam_dot = (hvx * -math.cos(lam0) + hvz * -math.sin(lam0)) / leg.length_m
    return SwingState(pin, side, lam0, lam_dot, pitch, w)


def swing_accelerations(sw: SwingState, thrust_fore: float, thrust_aft: float,
                        leg: LegConfig, params: QuadParams) -> tuple[float, float]:
    """Generalized accelerations (lam_dd, pitch_dd) of the pinned chain."""
    m = params.mass
    iyy = params.inertia_yy
    g = params.g
    l_m = leg.length_m
    b = sw.side * leg.mount_x
    k = leg.hinge_k_si
    c = leg.hinge_damping
    delta = sw.deflection(leg)
    ddot = sw.lam_dot - sw.pitch_rate
    slt = math.sin(sw.lam - sw.pitch)
    clt = math.cos(sw.lam - sw.pitch)
    ftot = thrust_fore + thrust_aft
    m11 = m * l_m * l_m
    m12 = m * l_m * b * slt
    m22 = m * b * b + iyy
    r1 = (m * l_m * b * clt * sw.pitch_rate * sw.pitch_rate
          + m * g * l_m * math.sin(sw.lam)
          - k * delta - c * ddot
          - ftot * l_m * slt)
    r2 = (-m * l_m * b * clt * sw.lam_dot * sw.lam_dot
          + m * g * b * math.cos(sw.pitch)
          + k * delta + c * ddot
          - ftot * b
          + (thrust_fore - thrust_aft) * params.arm_x)
    det = m11 * m22 - m12 * m12
    return (r1 * m22 - r2 * m12) / det, (r2 * m11 - r1 * m12) / det


def swing_step(sw: SwingState, thrust_fore: float, thrust_aft: float,
               leg: LegConfig, params: QuadParams, dt: float) -> None:
    """Advance the pinned chain one semi-implicit Euler step in place."""
    lam_dd, pitch_dd = swing_accelerations(sw, thrust_fore, thrust_aft, leg, params)
    sw.lam_dot += lam_dd * dt
    sw.pitch_rate += pitch_dd * dt
    sw.lam += sw.lam_dot * dt
    sw.pitch += sw.pitch_rate * dt


def locked_pivot_inertia(leg: LegConfig, params: QuadParams, side: int = 1) -> float:
    """Inertia about the pin with the hinge rigid at its rest angle
    (parallel-axis value of the body about the foot)."""
    l_m = leg.length_m
    b = side * leg.mount_x
    psi_s = side * leg.psi_rad
    return params.inertia_yy + params.mass * (l_m * l_m + b * b + 2.0 * l_m * b * math.sin(psi_s))


def locked_swing_step(sw: SwingState, leg: LegConfig, params: QuadParams, dt: float) -> None:
    """Single-DOF compound-pendulum step with the hinge rigid (validation
    mode: the hinge DOF is removed, lam tracks pitch + rest splay)."""
    psi_s = sw.side * leg.psi_rad
    b = sw.side * leg.mount_x
    l_m = leg.length_m
    i_lock = locked_pivot_inertia(leg, params, sw.side)
    torque = params.mass * params.g * (l_m * math.sin(sw.pitch + psi_s) + b * math.cos(sw.pitch))
    acc = torque / i_lock
    sw.pitch_rate += acc * dt
    sw.pitch += sw.pitch_rate * dt
    sw.lam = sw.pitch + psi_s
    sw.lam_dot = sw.pitch_rate


def classify_landing(contact: ContactState, min_ceiling_distance: float,
                     trigger_tau: float | None) -> LandingOutcome:
    """Map a terminal contact state onto the four landing classes.

    Total over all phases: an unterminated swing (timeout while pinned)
    counts as a two-leg landing, anything with no feet attached is a
    body-only failure.
    """
    if contact.phase is Phase.FOUR_LEGGED:
        n_legs = 4
        cls = (LandingClass.SUBOPTIMAL_FOUR_LEG_CONTACT if contact.body_or_prop_contact
               else LandingClass.OPTIMAL_FOUR_LEG)
    elif contact.phase in (Phase.TWO_LEGGED_REST, Phase.FORE_ATTACHED):
        n_legs = 2
        cls = LandingClass.SUBOPTIMAL_TWO_LEG
    else:  # FREE or BODY_CONTACT: nothing adhered
        n_legs = 0
        cls = LandingClass.FAILURE_BODY_ONLY
    impact = abs(contact.first_contact_pitch) if contact.first_contact_pitch is not None else None
    return LandingOutcome(cls, n_legs, contact.body_or_prop_contact, impact,
                          min_ceiling_distance, trigger_tau)
