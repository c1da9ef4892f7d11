"""Bench sysid fits: pendulum inertia, battery curve, motor time constants."""

import math

import numpy as np
import pytest

from perchlab.sysid import (BatteryCompParams, PendulumSetup, compensate_pwm,
                            estimate_inertia, fit_thrust_voltage,
                            fit_time_constant, load_gyro_csv,
                            load_tachometer_csv, load_thrust_stand_csv)


def gyro_trace(period, n_cycles=8, dt=1e-3, peak_times=None):
    """Clean oscillation, or gaussian bumps at given peak times."""
    if peak_times is None:
        t = np.arange(0.0, n_cycles * period, dt)
        return t, np.sin(2.0 * math.pi * t / period)
    t = np.arange(0.0, max(peak_times) + 0.5, dt)
    rate = np.zeros_like(t)
    for tc in peak_times:
        rate += np.exp(-0.5 * ((t - tc) / 0.03) ** 2)
    return t, rate


def test_inertia_formula_and_period():
    setup = PendulumSetup(mass=0.0381, string_separation=0.10, string_length=0.50)
    period = 0.8                        # [s]
    t, rate = gyro_trace(period)
    est = estimate_inertia(setup, t, rate)

    assert abs(est.t_avg - period) < 2e-3, f"period off: {est.t_avg}"
    # the estimate must be exactly m g (D T)^2 / (L (4 pi)^2) of the
    # measured period — independent arithmetic, no shared code path
    expected = (0.0381 * 9.81 * (0.10 * est.t_avg) ** 2
                / (0.50 * (4.0 * math.pi) ** 2))
    assert abs(est.inertia - expected) < 1e-18 * max(1.0, abs(expected))
    assert est.n_peaks >= 7
    assert est.warnings == [], f"clean trace flagged: {est.warnings}"
    print(f"inertia: {est.inertia:.4e} kg m^2 from T={est.t_avg:.4f} s")


def test_inertia_irregular_periods_warn():
    setup = PendulumSetup(mass=0.04, string_separation=0.1, string_length=0.4)
    t, rate = gyro_trace(None, peak_times=[0.3, 1.0, 1.5, 2.4])
    est = estimate_inertia(setup, t, rate)
    assert est.warnings, "23% period spread must attach a warning"
    assert "vary" in est.warnings[0]


def test_inertia_needs_three_peaks():
    setup = PendulumSetup(mass=0.04, string_separation=0.1, string_length=0.4)
    t, rate = gyro_trace(None, peak_times=[0.5])
    with pytest.raises(ValueError, match="peaks"):
        estimate_inertia(setup, t, rate)
    with pytest.raises(ValueError):
        PendulumSetup(mass=-1.0, string_separation=0.1, string_length=0.4)


def battery_samples():
    """Exact samples from a known two-region curve, continuous at the split."""
    a_lo, b_lo = 0.618, 1.394
    a_hi, b_hi = 2.097, -4.464
    c_hi = a_lo * math.log(b_lo * 5.0) - a_hi * math.log(5.0 - b_hi)
    f_lo = np.linspace(0.5, 5.0, 10)
    f_hi = np.linspace(5.5, 30.0, 20)
    v_lo = a_lo * np.log(b_lo * f_lo)
    v_hi = a_hi * np.log(f_hi - b_hi) + c_hi
    return (np.concatenate([f_lo, f_hi]), np.concatenate([v_lo, v_hi]),
            (a_lo, b_lo), (a_hi, b_hi, c_hi))


def test_battery_fit_round_trip():
    f, v, (a_lo, b_lo), (a_hi, b_hi, c_hi) = battery_samples()
    params = fit_thrust_voltage(f, v)
    assert abs(params.low.a - a_lo) / a_lo < 0.01
    assert abs(params.low.b - b_lo) / b_lo < 0.01
    assert params.low.c == 0.0
    assert abs(params.high.a - a_hi) / a_hi < 0.01
    assert abs(params.high.b - b_hi) / abs(b_hi) < 0.01
    assert abs(params.high.c - c_hi) / abs(c_hi) < 0.01
    assert params.low.rms < 1e-9 and params.high.rms < 1e-6
    print(f"low: a={params.low.a:.4f} b={params.low.b:.4f}; "
          f"high: a={params.high.a:.4f} b={params.high.b:.4f} "
          f"c={params.high.c:.4f}")

    doc = params.to_dict()
    for key in ("low", "high", "split_gf", "pwm_max", "split_discontinuity_v"):
        assert key in doc
    assert doc["split_discontinuity_v"] < 0.05, "regions should nearly meet"


def test_battery_fit_rejections():
    f, v, _, _ = battery_samples()
    with pytest.raises(ValueError, match="5 samples"):
        fit_thrust_voltage(f[:8], v[:8])
    with pytest.raises(ValueError, match="slope downward"):
        fit_thrust_voltage(f, -v)
    bad_f = f.copy()
    bad_f[0] = 0.0                      # ln(b f) undefined at zero thrust
    with pytest.raises(ValueError):
        fit_thrust_voltage(bad_f, v)


def test_compensate_pwm_scaling_and_clamp():
    f, v, _, _ = battery_samples()
    params = fit_thrust_voltage(f, v)
    v_req = params.v_motor(10.0)
    cmd = compensate_pwm(params, 10.0, v_battery=4.0)
    assert abs(cmd.pwm - v_req / 4.0 * 65535) < 1e-9
    assert not cmd.clamped

    sagged = compensate_pwm(params, 10.0, v_battery=0.5 * v_req)
    assert sagged.clamped and sagged.pwm == 65535.0
    assert sagged.v_required == v_req, "clamp must keep the request visible"
    with pytest.raises(ValueError):
        compensate_pwm(params, 10.0, v_battery=0.0)


def test_time_constant_round_trip():
    for tau, f0, finf, direction in ((0.05, 0.0, 0.25, "up"),
                                     (0.16, 0.20, 0.05, "down")):
        t = 3.7 + np.arange(0.0, 1.0, 1e-3)   # origin far from zero
        f = finf + (f0 - finf) * np.exp(-(t - t[0]) / tau)
        fit = fit_time_constant(t, f, direction=direction)
        assert abs(fit.tau - tau) < 1e-3, f"tau {fit.tau} vs {tau}"
        assert abs(fit.f_start - f0) < 1e-6
        assert abs(fit.f_final - finf) < 1e-6
        assert fit.r_squared > 0.999
        assert fit.direction == direction
        assert fit.warnings == []


def test_time_constant_poor_fit_warns():
    t = np.arange(0.0, 2.0, 1e-2)
    f = 0.1 + 0.05 * np.sin(2.0 * math.pi * 3.0 * t)
    fit = fit_time_constant(t, f)
    assert fit.r_squared < 0.9
    assert fit.warnings and "poor match" in fit.warnings[0]


def test_time_constant_rejections():
    with pytest.raises(ValueError, match="constant"):
        fit_time_constant(np.arange(20.0), np.full(20, 0.3))
    with pytest.raises(ValueError, match="10 samples"):
        fit_time_constant(np.arange(5.0), np.arange(5.0))


def test_csv_loaders(tmp_path):
    gyro = tmp_path / "gyro.csv"
    gyro.write_text("t,rate\n0.0,0.1\n0.001,0.2\n0.002,0.15\n")
    t, rate = load_gyro_csv(gyro)
    assert np.array_equal(t, [0.0, 0.001, 0.002])
    assert np.array_equal(rate, [0.1, 0.2, 0.15])

    stand = tmp_path / "stand.csv"
    stand.write_text("pwm,thrust_gf,v_supply,v_onboard\n"
                     "32768,10.0,4.2,4.0\n65535,20.0,4.2,3.9\n")
    thrust, v_motor = load_thrust_stand_csv(stand)
    assert np.array_equal(thrust, [10.0, 20.0])
    assert abs(v_motor[0] - 4.0 * 32768 / 65535) < 1e-12
    assert abs(v_motor[1] - 3.9) < 1e-12

    tach = tmp_path / "tach.csv"
    tach.write_text("t,rpm\n0.0,1000\n0.01,2000\n")
    t, thrust = load_tachometer_csv(tach, thrust_coeff=1e-7)
    assert abs(thrust[0] - 0.1) < 1e-12 and abs(thrust[1] - 0.4) < 1e-12

    bad = tmp_path / "bad.csv"
    bad.write_text("t\n0.0\n1.0\n")
    with pytest.raises(ValueError):
        load_gyro_csv(bad)
