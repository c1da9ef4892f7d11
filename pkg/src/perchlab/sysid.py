"""Bench system-identification fits for the physical quad.

Three small toolchains used to pin the simulation constants:

  * rotational inertia from a bifilar-pendulum gyro log (the quad hangs
    from two vertical strings and oscillates about the yaw axis of the
    suspension; the oscillation period gives the inertia),
  * the two-region thrust-to-motor-voltage regression behind the
    battery compensation algorithm, and
  * first-order time constants fitted to motor spin-up/spin-down
    thrust traces.

All fits are pure batch computations over time series loaded from CSV;
each returns a small report dataclass with a ``to_dict`` for the JSON
reports the command line writes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import find_peaks

GRAVITY = 9.81            # [m/s^2]
PWM_MAX = 65535           # 16-bit motor command counts
REGION_SPLIT_GF = 5.0     # [gf] boundary between the two voltage fits


# ---------------------------------------------------------------- inertia

@dataclass(frozen=True)
class PendulumSetup:
    """Bifilar suspension geometry."""

    mass: float               # [kg]
    string_separation: float  # D [m], distance between the strings
    string_length: float      # L [m]

    def __post_init__(self):
        for name in ("mass", "string_separation", "string_length"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive, got {v!r}")


@dataclass
class InertiaEstimate:
    inertia: float            # [kg m^2]
    t_avg: float              # [s] mean inter-peak period
    periods: list[float]      # [s]
    n_peaks: int
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "inertia_kg_m2": self.inertia,
            "t_avg_s": self.t_avg,
            "periods_s": list(self.periods),
            "n_peaks": self.n_peaks,
            "warnings": list(self.warnings),
        }


def estimate_inertia(setup: PendulumSetup, t: np.ndarray,
                     rate: np.ndarray) -> InertiaEstimate:
    """Inertia about the suspension axis from a gyro-rate oscillation.

    Peaks of the rate signal mark the oscillation period; the estimate is

        I = m g (D T_avg)^2 / (L (4 pi)^2)

    A spread of inter-peak intervals above 10% of their mean flags the
    trace as non-uniform (clipped log, decaying swing hitting the noise
    floor) without rejecting it.
    """
    t = np.asarray(t, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if t.shape != rate.shape or t.ndim != 1:
        raise ValueError("t and rate must be 1-D arrays of equal length")
    span = float(np.max(rate) - np.min(rate)) if rate.size else 0.0
    peaks, _ = find_peaks(rate, prominence=0.1 * span if span > 0.0 else None)
    if len(peaks) < 3:
        raise ValueError(
            f"found {len(peaks)} oscillation peaks; need at least 3 "
            f"to measure a period")
    periods = np.diff(t[peaks])
    t_avg = float(np.mean(periods))
    warnings = []
    cv = float(np.std(periods) / t_avg) if t_avg > 0.0 else np.inf
    if cv > 0.10:
        warnings.append(
            f"inter-peak periods vary by {cv:.1%} (> 10%); "
            f"trace may not be a clean oscillation")
    inertia = (setup.mass * GRAVITY
               * (setup.string_separation * t_avg) ** 2
               / (setup.string_length * (4.0 * math.pi) ** 2))
    return InertiaEstimate(inertia=inertia, t_avg=t_avg,
                           periods=[float(p) for p in periods],
                           n_peaks=len(peaks), warnings=warnings)


# --------------------------------------------------- battery compensation

@dataclass
class RegionFit:
    """One fitted voltage curve V(f) over a thrust region [gf]."""

    a: float
    b: float
    c: float
    rms: float                # [V] residual RMS
    form: str                 # "ln_bf" (V = a ln(b f) + c) or "ln_f_minus_b"

    def voltage(self, thrust_gf: float) -> float:
        if self.form == "ln_bf":
            arg = self.b * thrust_gf
        else:
            arg = thrust_gf - self.b
        if arg <= 0.0:
            raise ValueError(
                f"thrust {thrust_gf} gf outside the fitted domain "
                f"(log argument {arg:.4g} <= 0)")
        return self.a * math.log(arg) + self.c

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c,
                "rms_v": self.rms, "form": self.form}


@dataclass
class BatteryCompParams:
    """Two-region voltage curve plus the PWM scale it drives."""

    low: RegionFit            # thrust <= split_gf
    high: RegionFit           # thrust > split_gf
    split_gf: float = REGION_SPLIT_GF
    pwm_max: int = PWM_MAX

    def v_motor(self, thrust_gf: float) -> float:
        region = self.low if thrust_gf <= self.split_gf else self.high
        return region.voltage(thrust_gf)

    def split_discontinuity(self) -> float:
        """|V_low - V_high| where the regions meet (reported, not enforced)."""
        return abs(self.low.voltage(self.split_gf)
                   - self.high.voltage(self.split_gf))

    def to_dict(self) -> dict:
        return {"low": self.low.to_dict(), "high": self.high.to_dict(),
                "split_gf": self.split_gf, "pwm_max": self.pwm_max,
                "split_discontinuity_v": self.split_discontinuity()}


def _fit_low_region(f: np.ndarray, v: np.ndarray) -> RegionFit:
    # V = a ln(b f) + 0 = a ln f + a ln b: linear least squares in ln f.
    # c is pinned at zero; a free intercept would make b unidentifiable.
    if np.any(f <= 0.0):
        raise ValueError("low-region thrust must be positive for ln(b f)")
    a, albn = np.polyfit(np.log(f), v, 1)
    if a <= 0.0:
        raise ValueError(
            f"low-region voltage decreases with thrust (a = {a:.4g}); "
            f"not a valid thrust curve")
    b = math.exp(albn / a)
    resid = v - (a * np.log(b * f))
    return RegionFit(a=float(a), b=float(b), c=0.0,
                     rms=float(np.sqrt(np.mean(resid ** 2))), form="ln_bf")


def _fit_high_region(f: np.ndarray, v: np.ndarray) -> RegionFit:
    def model(x, a, b, c):
        return a * np.log(x - b) + c

    fmin = float(np.min(f))
    p0 = (2.0, fmin - 5.0, float(np.mean(v)))
    popt, _ = curve_fit(model, f, v, p0=p0, maxfev=20_000,
                        bounds=([1e-12, -np.inf, -np.inf],
                                [np.inf, fmin - 1e-9, np.inf]))
    a, b, c = (float(p) for p in popt)
    resid = v - model(f, a, b, c)
    return RegionFit(a=a, b=b, c=c,
                     rms=float(np.sqrt(np.mean(resid ** 2))),
                     form="ln_f_minus_b")


def fit_thrust_voltage(thrust_gf: np.ndarray, v_motor: np.ndarray,
                       split_gf: float = REGION_SPLIT_GF,
                       pwm_max: int = PWM_MAX) -> BatteryCompParams:
    """Fit the two-region V(f) curve from thrust-stand samples.

    The low region (f <= split) uses V = a ln(b f); the high region uses
    V = a ln(f - b) + c.  Each region needs at least 5 samples, and the
    data must slope upward (more thrust always costs more voltage).
    """
    f = np.asarray(thrust_gf, dtype=float)
    v = np.asarray(v_motor, dtype=float)
    if f.shape != v.shape or f.ndim != 1:
        raise ValueError("thrust and voltage must be 1-D arrays of equal length")
    lo = f <= split_gf
    hi = ~lo
    if np.count_nonzero(lo) < 5 or np.count_nonzero(hi) < 5:
        raise ValueError(
            f"need >= 5 samples per region, got {np.count_nonzero(lo)} "
            f"at <= {split_gf} gf and {np.count_nonzero(hi)} above")
    for mask, name in ((lo, "low"), (hi, "high")):
        order = np.argsort(f[mask])
        slope = np.polyfit(f[mask][order], v[mask][order], 1)[0]
        if slope <= 0.0:
            raise ValueError(
                f"{name}-region samples slope downward "
                f"({slope:.4g} V/gf); voltage must rise with thrust")
    return BatteryCompParams(low=_fit_low_region(f[lo], v[lo]),
                             high=_fit_high_region(f[hi], v[hi]),
                             split_gf=split_gf, pwm_max=pwm_max)


@dataclass
class PwmCommand:
    pwm: float                # [counts]
    v_required: float         # [V] motor voltage the curve asks for
    clamped: bool

    def to_dict(self) -> dict:
        return {"pwm": self.pwm, "v_required": self.v_required,
                "clamped": self.clamped}


def compensate_pwm(params: BatteryCompParams, thrust_gf: float,
                   v_battery: float) -> PwmCommand:
    """PWM counts that hold the commanded thrust at this battery voltage."""
    if v_battery <= 0.0:
        raise ValueError(f"battery voltage must be positive, got {v_battery}")
    v_req = params.v_motor(thrust_gf)
    raw = v_req / v_battery * params.pwm_max
    pwm = min(max(raw, 0.0), float(params.pwm_max))
    return PwmCommand(pwm=pwm, v_required=v_req, clamped=pwm != raw)


# ------------------------------------------------------- motor constants

@dataclass
class TimeConstantFit:
    tau: float                # [s]
    f_start: float            # fitted initial level
    f_final: float            # fitted settled level
    r_squared: float
    direction: str            # "up" | "down"
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"tau_s": self.tau, "f_start": self.f_start,
                "f_final": self.f_final, "r_squared": self.r_squared,
                "direction": self.direction, "warnings": list(self.warnings)}


def fit_time_constant(t: np.ndarray, f: np.ndarray,
                      direction: str = "up") -> TimeConstantFit:
    """First-order time constant of a spin-up or spin-down thrust trace.

    Fits f(t) = f_inf + (f_0 - f_inf) exp(-t/tau); the time origin is
    shifted to the first sample so the fit is invariant to when the log
    started.  An R^2 under 0.9 attaches a poor-fit warning but still
    returns tau.
    """
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    if t.shape != f.shape or t.ndim != 1:
        raise ValueError("t and f must be 1-D arrays of equal length")
    if t.size < 10:
        raise ValueError(f"need >= 10 samples for a fit, got {t.size}")
    span = float(np.max(f) - np.min(f))
    if span <= 0.0 or span < 1e-12 * max(abs(float(np.max(f))), 1.0):
        raise ValueError("trace is constant; no dynamics to fit")
    ts = t - t[0]

    def model(x, f_inf, f_0, tau):
        return f_inf + (f_0 - f_inf) * np.exp(-x / tau)

    dur = float(ts[-1]) if ts[-1] > 0.0 else 1.0
    popt, _ = curve_fit(model, ts, f,
                        p0=(float(f[-1]), float(f[0]), dur / 5.0),
                        bounds=([-np.inf, -np.inf, 1e-9],
                                [np.inf, np.inf, np.inf]),
                        maxfev=20_000)
    f_inf, f_0, tau = (float(p) for p in popt)
    resid = f - model(ts, f_inf, f_0, tau)
    ss_tot = float(np.sum((f - np.mean(f)) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0.0 else 0.0
    warnings = []
    if r2 < 0.9:
        warnings.append(
            f"R^2 = {r2:.3f} < 0.9; trace is a poor match for a "
            f"first-order response")
    return TimeConstantFit(tau=tau, f_start=f_0, f_final=f_inf,
                           r_squared=r2, direction=direction,
                           warnings=warnings)


# ------------------------------------------------------------ CSV inputs

def load_gyro_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Gyro log `t,rate` (s, rad/s or deg/s; units cancel in the period)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] < 2:
        raise ValueError(f"{path}: expected columns t,rate")
    return data[:, 0], data[:, 1]


def load_thrust_stand_csv(path, pwm_max: int = PWM_MAX
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Thrust-stand log `pwm,thrust_gf,v_supply,v_onboard`.

    Returns (thrust [gf], motor voltage [V]) with
    V_motor = V_onboard * pwm / pwm_max.
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] < 4:
        raise ValueError(
            f"{path}: expected columns pwm,thrust_gf,v_supply,v_onboard")
    pwm, thrust, _, v_onboard = (data[:, k] for k in range(4))
    return thrust, v_onboard * pwm / float(pwm_max)


def load_tachometer_csv(path, thrust_coeff: float
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Tachometer log `t,rpm`; thrust = coeff * rpm^2 (coefficient and
    therefore thrust units supplied by the caller's propeller model)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] < 2:
        raise ValueError(f"{path}: expected columns t,rpm")
    return data[:, 0], thrust_coeff * data[:, 1] ** 2
