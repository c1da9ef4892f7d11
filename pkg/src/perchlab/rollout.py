"""Single-trial engine: approach, trigger, flip, contact, swing, classify.

One rollout runs the full pipeline at a fixed 1 kHz physics step with a
100 Hz sensor/controller tick (sample-and-hold, like the bench setup):

    hover -> track the commanded velocity ray -> policy watches the
    optical-flow triple each tick -> on fire, open-loop flip, latched ->
    first ceiling touch either pins a foot pair (momentum transfer into
    the pinned swing) or ends the trial on body contact -> swing until
    the second pair attaches, the chain rests, or the timeout lapses.

The policy is a callable sensed -> a_rot | None so the same engine runs
fixed trigger/flip pairs during learning and the trained two-stage
policy during evaluation.  Everything is plain-float arithmetic in one
loop body; rollouts are bit-reproducible for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .contact import (
    ConstraintDriftError,
    ContactState,
    Phase,
    classify_landing,
    detect_contact,
    pin_impact,
)
from .control import ApproachCondition, ControllerGains, a_rot_max, execute_flip, track_trajectory
from .dynamics import QuadParams, QuadState, _step, motor_alpha
from .legs import LegConfig, hard_body_points
from .sensing import SensorConfig, SensoryState, sense

PolicyFn = Callable[[SensoryState], "float | None"]

TELEMETRY_FIELDS = ("t", "x", "z", "pitch", "vx", "vz", "pitch_rate",
                    "thrust_fore", "thrust_aft", "tau", "theta_x", "d_ceil")


@dataclass(frozen=True)
class RolloutConfig:
    dt: float = 1.0e-3               # physics step [s]
    sensor: SensorConfig = SensorConfig()
    post_contact_timeout: float = 2.0  # pin formation to forced stop [s]
    flip_timeout: float = 3.0        # trigger to first contact bound [s]
    rest_ke: float = 1.0e-6          # swing rest threshold [J]
    rest_hold: float = 0.2           # time below threshold to call rest [s]
    max_time: float = 20.0           # whole-trial bound [s]
    record_telemetry: bool = False


@dataclass
class RolloutResult:
    outcome: LandingOutcome
    contact: ContactState
    triggered: bool
    s_trg: SensoryState | None       # sensed triple at the firing tick
    t_trigger: float | None
    a_rot: float | None              # requested flip moment [N mm]
    a_rot_clamped: bool
    velocity_converged: bool         # tracked the ray within 5% / 2 deg
    t_final: float
    telemetry: list[tuple] | None


def fixed_pair_policy(tau_cr: float, a_rot: float) -> PolicyFn:
    """Trigger when the sensed tau first crosses below tau_cr."""

    def policy(s: SensoryState) -> float | None:
        return a_rot if s.tau <= tau_cr else None

    return policy


def run_rollout(cond: ApproachCondition, leg: LegConfig, params: QuadParams,
                policy_fn: PolicyFn, cfg: RolloutConfig = RolloutConfig(),
                gains: ControllerGains = ControllerGains(),
                rng: np.random.Generator | None = None) -> RolloutResult:
    dt = cfg.dt
    ceiling = cond.ceiling_height
    scfg = cfg.sensor
    ticks = max(int(round(scfg.tick / dt)), 1)
    a_up = motor_alpha(dt, params.tau_up)
    a_dn = motor_alpha(dt, params.tau_down)
    m = params.mass
    iyy = params.inertia_yy
    g = params.g
    arm = params.arm_x
    fmax = params.max_thrust_per_motor

    # free-flight contact checks only start once anything could reach
    hard = [(name, px, pz) for name, px, pz in hard_body_points(params)]
    reach = max(max(math.hypot(px, pz) for _, px, pz in hard),
                math.hypot(*leg.foot_body_point(+1)))
    near_z = ceiling - reach - 1.0e-9

    # plain-float state (hot loop)
    x = 0.0
    z = 0.0
    pitch = 0.0
    vx = 0.0
    vz = 0.0
    rate = 0.0
    ff = fa = 0.5 * m * g
    cmd_f, cmd_a = ff, fa

    vdx, vdz = cond.vx, cond.vz
    cos_tol = math.cos(math.radians(2.0))

    contact = ContactState()
    triggered = False
    s_trg: SensoryState | None = None
    t_trg: float | None = None
    a_req: float | None = None
    clamped = False
    vel_ok = False
    d_min = ceiling
    sensed = sense(QuadState(0.0, x, z, pitch, vx, vz, rate, ff, fa), ceiling, scfg)
    telemetry: list[tuple] | None = [] if cfg.record_telemetry else None

    # pinned-swing locals, active once pin is not None
    pin = None
    pin_t = 0.0
    side = 0
    lam = lam_dot = 0.0
    l_m = leg.length_m
    b = 0.0
    k_si = leg.hinge_k_si
    c_h = leg.hinge_damping
    psi = leg.psi_rad
    psi_s = 0.0
    tol = leg.foot_attach_tolerance
    rest_since: float | None = None

    t = 0.0
    i = 0
    end_phase: Phase | None = None

    while t < cfg.max_time:
        on_tick = (i % ticks) == 0
        if pin is None:
            if on_tick:
                sensed = sense(QuadState(t, x, z, pitch, vx, vz, rate, ff, fa),
                               ceiling, scfg, rng)
                if telemetry is not None:
                    telemetry.append((t, x, z, pitch, vx, vz, rate, ff, fa,
                                      sensed.tau, sensed.theta_x, sensed.d_ceil))
                if not triggered:
                    a = policy_fn(sensed)
                    if a is not None:
                        triggered = True
                        s_trg = sensed
                        t_trg = t
                        a_req = float(a)
                        clamped = a_req > a_rot_max(params) + 1.0e-12
                        fc = execute_flip(a_req, params)
                        cmd_f, cmd_a = fc.thrust_cmd_fore, fc.thrust_cmd_aft
                    else:
                        spd = math.hypot(vx, vz)
                        if abs(spd - cond.speed) <= 0.05 * cond.speed and spd > 0.0:
                            if (vx * vdx + vz * vdz) >= cos_tol * spd * cond.speed:
                                vel_ok = True
                        tc = track_trajectory(QuadState(t, x, z, pitch, vx, vz, rate, ff, fa),
                                              cond, params, gains)
                        cmd_f, cmd_a = tc.thrust_cmd_fore, tc.thrust_cmd_aft
            x, z, pitch, vx, vz, rate, ff, fa = _step(
                x, z, pitch, vx, vz, rate, ff, fa, cmd_f, cmd_a,
                dt, m, iyy, arm, fmax, a_up, a_dn, g)
            t += dt
            i += 1
            d = ceiling - z
            if d < d_min:
                d_min = d
            if z >= near_z:
                ev = detect_contact(x, z, pitch, leg, params, ceiling)
                if ev is not None:
                    if contact.first_contact_pitch is None:
                        contact.first_contact_pitch = ev.pitch_deg
                    if ev.element.startswith("foot"):
                        side = +1 if ev.element == "foot_fore" else -1
                        sw = pin_impact(x, z, pitch, vx, vz, rate, ev.point, side, leg, params)
                        pin = ev.point
                        pin_t = t
                        lam, lam_dot = sw.lam, sw.lam_dot
                        pitch, rate = sw.pitch, sw.pitch_rate
                        b = side * leg.mount_x
                        psi_s = side * psi
                        contact.phase = Phase.FORE_ATTACHED
                        contact.fore_pivot = pin
                        contact.pivot_side = side
                        cmd_f = cmd_a = 0.0  # motors cut at touchdown
                        # symmetric touch: the other pair may already be there
                        hz = pin[1] + l_m * math.cos(lam)
                        cz = hz - b * math.sin(pitch)
                        ofz = (cz - b * math.sin(pitch)
                               - l_m * math.cos(pitch - psi_s))
                        if ofz >= ceiling - tol:
                            contact.hind_attached = True
                            end_phase = Phase.FOUR_LEGGED
                            break
                    else:
                        contact.body_or_prop_contact = True
                        end_phase = Phase.BODY_CONTACT
                        break
            if triggered:
                if t - t_trg > cfg.flip_timeout:
                    end_phase = Phase.FREE  # flip never reached the ceiling
                    break
                if z < -1.0:
                    end_phase = Phase.FREE  # fell away below the start point
                    break
        else:
            # pinned swing: thrust decays toward the cut command
            ff += (0.0 - ff) * a_dn
            fa += (0.0 - fa) * a_dn
            delta = lam - pitch - psi_s
            ddot = lam_dot - rate
            slt = math.sin(lam - pitch)
            clt = math.cos(lam - pitch)
            ftot = ff + fa
            m11 = m * l_m * l_m
            m12 = m * l_m * b * slt
            m22 = m * b * b + iyy
            r1 = (m * l_m * b * clt * rate * rate
                  + m * g * l_m * math.sin(lam)
                  - k_si * delta - c_h * ddot
                  - ftot * l_m * slt)
            r2 = (-m * l_m * b * clt * lam_dot * lam_dot
                  + m * g * b * math.cos(pitch)
                  + k_si * delta + c_h * ddot
                  - ftot * b
                  + (ff - fa) * arm)
            det = m11 * m22 - m12 * m12
            lam_dot += ((r1 * m22 - r2 * m12) / det) * dt
            rate += ((r2 * m11 - r1 * m12) / det) * dt
            lam += lam_dot * dt
            pitch += rate * dt
            t += dt
            i += 1
            sl = math.sin(lam)
            cl = math.cos(lam)
            sp = math.sin(pitch)
            cp = math.cos(pitch)
            hz = pin[1] + l_m * cl
            cz = hz - b * sp
            # the ceiling is solid: the deepest body/prop point past the
            # plane gets a position projection plus an inelastic impulse
            # that removes its approach velocity (the plane only pushes
            # back), so the swing slides along the ceiling instead of
            # passing through it; the graze flag latches on first touch
            pen = 0.0
            jl = jp = 0.0
            for _, px, pz in hard:
                p = cz + px * sp + pz * cp - ceiling
                if p > pen:
                    pen = p
                    jl = -l_m * sl
                    jp = (px - b) * cp - pz * sp
            if pen > 0.0 and (jl * jl + jp * jp) > 1.0e-12:
                contact.body_or_prop_contact = True
                scale = pen / (jl * jl + jp * jp)
                lam -= jl * scale
                pitch -= jp * scale
                sl = math.sin(lam)
                cl = math.cos(lam)
                sp = math.sin(pitch)
                cp = math.cos(pitch)
                hz = pin[1] + l_m * cl
                cz = hz - b * sp
                vn = jl * lam_dot + jp * rate
                if vn > 0.0:
                    m12n = m * l_m * b * math.sin(lam - pitch)
                    detn = m11 * m22 - m12n * m12n
                    w1 = (m22 * jl - m12n * jp) / detn
                    w2 = (m11 * jp - m12n * jl) / detn
                    imp = -vn / (jl * w1 + jp * w2)
                    lam_dot += w1 * imp
                    rate += w2 * imp
            hx = pin[0] - l_m * sl
            cx = hx - b * cp
            d = ceiling - cz
            if d < d_min:
                d_min = d
            if telemetry is not None and (i % ticks) == 0:
                vcx = -l_m * lam_dot * cl + b * rate * sp
                vcz = -l_m * lam_dot * sl - b * rate * cp
                telemetry.append((t, cx, cz, pitch, vcx, vcz, rate, ff, fa,
                                  sensed.tau, sensed.theta_x, sensed.d_ceil))
            # second pair attach ends the landing
            ofz = cz - b * sp - l_m * math.cos(pitch - psi_s)
            if ofz >= ceiling - tol:
                contact.hind_attached = True
                end_phase = Phase.FOUR_LEGGED
                break
            # rest detection on the chain's kinetic energy
            vcx = -l_m * lam_dot * cl + b * rate * sp
            vcz = -l_m * lam_dot * sl - b * rate * cp
            ke = 0.5 * m * (vcx * vcx + vcz * vcz) + 0.5 * iyy * rate * rate
            if ke < cfg.rest_ke:
                if rest_since is None:
                    rest_since = t
                elif t - rest_since >= cfg.rest_hold:
                    end_phase = Phase.TWO_LEGGED_REST
                    break
            else:
                rest_since = None
            if t - pin_t > cfg.post_contact_timeout:
                end_phase = Phase.FORE_ATTACHED  # unterminated swing
                break

    if end_phase is None:  # max_time lapsed
        end_phase = Phase.FORE_ATTACHED if pin is not None else Phase.FREE
    if pin is not None:
        # the pinned foot recomputed through the chain must still sit on
        # the attach point; drift can only come from float corruption
        hx = pin[0] - l_m * math.sin(lam)
        hz = pin[1] + l_m * math.cos(lam)
        drift = math.hypot(hx + l_m * math.sin(lam) - pin[0],
                           hz - l_m * math.cos(lam) - pin[1])
        if drift > 1.0e-4:
            raise ConstraintDriftError(f"pinned foot drifted {drift:.2e} m off its attach point")
        delta = lam - pitch - psi_s
        contact.hinge_deflections = (delta, 0.0) if side > 0 else (0.0, delta)
    contact.phase = end_phase

    outcome = classify_landing(contact, d_min, s_trg.tau if s_trg is not None else None)
    return RolloutResult(
        outcome=outcome,
        contact=contact,
        triggered=triggered,
        s_trg=s_trg,
        t_trigger=t_trg,
        a_rot=a_req,
        a_rot_clamped=clamped,
        velocity_converged=vel_ok,
        t_final=t,
        telemetry=telemetry,
    )
