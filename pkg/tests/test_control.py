"""Approach controller and flip actuation checks."""

import math

import pytest

from perchlab.control import (ApproachCondition, ControllerGains, a_rot_max,
                              execute_flip, track_trajectory)
from perchlab.dynamics import MotorCommand, QuadParams, QuadState, hover_state, step_dynamics

DT = 1.0e-3


def test_condition_validation():
    with pytest.raises(ValueError):
        ApproachCondition(speed=0.2, angle_deg=45.0)
    with pytest.raises(ValueError):
        ApproachCondition(speed=2.0, angle_deg=0.0)
    with pytest.raises(ValueError):
        ApproachCondition(speed=2.0, angle_deg=95.0)
    c = ApproachCondition(speed=2.0, angle_deg=30.0)
    assert abs(c.vx - 2.0 * math.cos(math.radians(30.0))) < 1e-12
    assert abs(c.vz - 1.0) < 1e-12


def test_on_ray_vertical_is_weight_holding():
    # riding the commanded ray straight up: thrust balances weight, no moment
    p = QuadParams()
    cond = ApproachCondition(speed=2.5, angle_deg=90.0)
    s = QuadState(vx=0.0, vz=2.5)
    cmd = track_trajectory(s, cond, p)
    ftot = cmd.thrust_cmd_fore + cmd.thrust_cmd_aft
    assert abs(ftot - p.mass * p.g) < 0.02 * p.mass * p.g, (
        f"on-ray thrust {ftot:.4f} N vs weight {p.mass * p.g:.4f} N")
    assert abs(cmd.thrust_cmd_fore - cmd.thrust_cmd_aft) < 1e-6


def test_velocity_convergence_from_hover():
    # the paper-range worst case: fast, steep approach
    p = QuadParams()
    cond = ApproachCondition(speed=2.70, angle_deg=70.0)
    s = hover_state(p)
    for _ in range(1000):
        s = step_dynamics(s, track_trajectory(s, cond, p), p, DT)
    speed = math.hypot(s.vx, s.vz)
    angle = math.degrees(math.atan2(s.vz, s.vx))
    print(f"after 1 s: {speed:.3f} m/s at {angle:.2f} deg "
          f"(commanded {cond.speed} at {cond.angle_deg})")
    assert abs(speed - cond.speed) < 0.05 * cond.speed, (
        f"speed {speed:.3f} not within 5% of {cond.speed}")
    assert abs(angle - cond.angle_deg) < 2.0, (
        f"angle {angle:.2f} not within 2 deg of {cond.angle_deg}")


def test_convergence_across_grid_corners():
    # corners of the sweep grid; the 4 m/s^2 acceleration cap makes the
    # fast cells need most of 1 s just for the run-up, so allow 2 s
    p = QuadParams()
    for speed, angle in ((1.5, 30.0), (3.5, 30.0), (1.5, 90.0), (3.5, 90.0)):
        cond = ApproachCondition(speed=speed, angle_deg=angle)
        s = hover_state(p)
        for _ in range(2000):
            s = step_dynamics(s, track_trajectory(s, cond, p), p, DT)
        v = math.hypot(s.vx, s.vz)
        a = math.degrees(math.atan2(s.vz, s.vx))
        assert abs(v - speed) < 0.05 * speed, f"({speed}, {angle}): speed {v:.3f}"
        assert abs(a - angle) < 2.0, f"({speed}, {angle}): angle {a:.2f}"


def test_commands_always_within_limits():
    p = QuadParams()
    cond = ApproachCondition(speed=3.5, angle_deg=45.0)
    s = QuadState(vx=-2.0, vz=-1.0, pitch=0.8, pitch_rate=-4.0)
    for _ in range(500):
        cmd = track_trajectory(s, cond, p)
        assert 0.0 <= cmd.thrust_cmd_fore <= p.max_thrust_per_motor
        assert 0.0 <= cmd.thrust_cmd_aft <= p.max_thrust_per_motor
        s = step_dynamics(s, cmd, p, DT)


def test_flip_zero_action_cuts_motors():
    cmd = execute_flip(0.0, QuadParams())
    assert cmd == MotorCommand(0.0, 0.0)


def test_flip_saturation_boundary():
    p = QuadParams()
    amax = a_rot_max(p)
    assert abs(amax - p.arm_x * p.max_thrust_per_motor * 1e3) < 1e-12
    cmd = execute_flip(amax, p)
    assert abs(cmd.thrust_cmd_fore - p.max_thrust_per_motor) < 1e-12
    assert cmd.thrust_cmd_aft == 0.0
    # beyond the achievable moment the command clamps at max thrust
    over = execute_flip(2.0 * amax, p)
    assert over.thrust_cmd_fore == cmd.thrust_cmd_fore


def test_flip_steady_moment_matches_request():
    # after motor transients the realized pitch moment settles at a_rot
    p = QuadParams()
    a_rot = 5.0  # [N mm], unclamped
    s = hover_state(p)
    cmd = execute_flip(a_rot, p)
    for _ in range(1500):
        s = step_dynamics(s, cmd, p, DT)
    moment = (s.thrust_fore - s.thrust_aft) * p.arm_x  # [N m]
    err = abs(moment - a_rot * 1e-3) / (a_rot * 1e-3)
    print(f"steady flip moment {moment * 1e3:.4f} N mm vs requested {a_rot}")
    assert err < 0.02, f"steady moment off by {err * 100:.2f}%"
