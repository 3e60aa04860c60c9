"""Delay-line frequency discriminator, PI servo and closed-loop lock models.

The discriminator mixes the beat note with a delayed copy of itself; after
low-pass filtering the error voltage is ``sign * V0 * cos(2 pi f tau_d)``.
Zero crossings at ``f = (2k+1)/(4 tau_d)`` serve as lock points, with slope
magnitude ``2 pi V0 tau_d`` and monotonic capture half-range ``1/(4 tau_d)``
(so |slope| * halfwidth = pi V0 / 2 for any delay: the stability/capture
trade-off).  Two fidelities are provided: a discrete-time PI loop for short
runs and a single-pole spectral shaping model for hour-long runs.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.signal import lfilter

from .errors import ParameterError
from .noisegen import (
    FrequencyTrace,
    NoiseSpec,
    OscillatorModel,
    derive_seed,
    oscillator_trace,
    synth_power_law,
    write_trace_csv,
)

#: Speed of light, m/s (exact).
C_M_PER_S = 299792458.0

#: Velocity factor of solid-PE coax; 5 m at 0.66 puts a lock point within
#: 2% of 30 MHz, consistent with the hardware this models.
DEFAULT_VELOCITY_FACTOR = 0.66


def cable_delay(length_m: float, velocity_factor: float = DEFAULT_VELOCITY_FACTOR) -> float:
    """Electrical delay of a cable: length / (vf * c)."""
    if length_m < 0.0:
        raise ParameterError("length_m must be >= 0")
    if not 0.0 < velocity_factor <= 1.0:
        raise ParameterError("velocity_factor must be in (0, 1]")
    return length_m / (velocity_factor * C_M_PER_S)


@dataclass(frozen=True)
class DiscriminatorConfig:
    """Delay-line discriminator parameters.

    ``noise_v2_per_hz`` is the white detection-noise voltage density at the
    mixer output (V^2/Hz); it sets the in-loop noise floor and is a
    calibration knob, not a physically derived value.
    """

    delay_s: float
    amplitude_v: float
    sign: int = 1
    bandpass_center_hz: float = 30e6
    bandpass_halfwidth_hz: float = 15e6
    noise_v2_per_hz: float = 0.0

    def __post_init__(self):
        if self.delay_s <= 0.0:
            raise ParameterError("delay_s must be > 0")
        if self.amplitude_v <= 0.0:
            raise ParameterError("amplitude_v must be > 0")
        if self.sign not in (-1, 1):
            raise ParameterError("sign must be +1 or -1")
        if self.bandpass_halfwidth_hz <= 0.0:
            raise ParameterError("bandpass_halfwidth_hz must be > 0")
        if self.noise_v2_per_hz < 0.0:
            raise ParameterError("noise_v2_per_hz must be >= 0")
        lo = self.bandpass_center_hz - self.bandpass_halfwidth_hz
        hi = self.bandpass_center_hz + self.bandpass_halfwidth_hz
        spacing = 1.0 / (2.0 * self.delay_s)
        k_lo = math.ceil((lo * 4.0 * self.delay_s - 1.0) / 2.0)
        if max(k_lo, 0) * spacing + 1.0 / (4.0 * self.delay_s) >= hi:
            raise ParameterError("bandpass passband contains no lock point")

    def in_passband(self, f_hz) -> np.ndarray:
        return np.abs(np.asarray(f_hz, float) - self.bandpass_center_hz) < self.bandpass_halfwidth_hz


ThermalProfile = Union[Callable[[float], float], Tuple[Sequence[float], Sequence[float]]]


@dataclass(frozen=True)
class ThermalModel:
    """Fractional delay change per kelvin plus a temperature history (K vs start)."""

    tempco_per_K: float
    temperature_profile: ThermalProfile

    def __post_init__(self):
        if abs(self.tempco_per_K) >= 1e-2:
            raise ParameterError("|tempco_per_K| must be < 1e-2")

    def delta_t(self, t_s: float) -> float:
        if callable(self.temperature_profile):
            return float(self.temperature_profile(t_s))
        times, temps = self.temperature_profile
        return float(np.interp(t_s, times, temps))

    def delay_at(self, disc: DiscriminatorConfig, t_s: float) -> float:
        return disc.delay_s * (1.0 + self.tempco_per_K * self.delta_t(t_s))


def linear_ramp(rate_K_per_s: float) -> Callable[[float], float]:
    return lambda t: rate_K_per_s * t


@dataclass(frozen=True)
class ServoConfig:
    """Discrete PI servo acting directly on the laser frequency actuator."""

    kp: float = 0.0
    ki: float = 0.0
    actuator_limit_hz: float = 50e6
    update_dt_s: float = 1e-3

    def __post_init__(self):
        if self.actuator_limit_hz <= 0.0:
            raise ParameterError("actuator_limit_hz must be > 0")
        if self.update_dt_s <= 0.0:
            raise ParameterError("update_dt_s must be > 0")
        if self.kp == 0.0 and self.ki == 0.0:
            raise ParameterError("at least one of kp, ki must be nonzero")


def error_signal(f_beat_hz, disc: DiscriminatorConfig, delay_s: Optional[float] = None):
    """Discriminator output, sign * V0 * cos(2 pi f tau_d); 0 V outside the passband."""
    tau = disc.delay_s if delay_s is None else delay_s
    f = np.asarray(f_beat_hz, dtype=float)
    v = disc.sign * disc.amplitude_v * np.cos(2.0 * np.pi * f * tau)
    v = np.where(disc.in_passband(f), v, 0.0)
    return float(v) if np.isscalar(f_beat_hz) else v


@dataclass(frozen=True)
class LockPoint:
    f_hz: float
    slope_sign: int


def lock_points(disc: DiscriminatorConfig, f_min_hz: float, f_max_hz: float) -> List[LockPoint]:
    """All zero crossings (2k+1)/(4 tau_d) inside [f_min, f_max] and the passband."""
    if f_min_hz >= f_max_hz:
        raise ParameterError("f_min must be < f_max")
    tau = disc.delay_s
    out = []
    k = max(0, math.ceil((f_min_hz * 4.0 * tau - 1.0) / 2.0))
    while True:
        f = (2 * k + 1) / (4.0 * tau)
        if f > f_max_hz:
            break
        if f >= f_min_hz and disc.in_passband(f):
            # d/df [sign V0 cos(2 pi f tau)] at f_k has sign: -sign * (-1)^k
            out.append(LockPoint(f_hz=f, slope_sign=-disc.sign * (1 if k % 2 == 0 else -1)))
        k += 1
    return out


def _nearest_lock_point(disc: DiscriminatorConfig, f_hz: float) -> float:
    tau = disc.delay_s
    k = max(0, round((f_hz * 4.0 * tau - 1.0) / 2.0))
    return (2 * k + 1) / (4.0 * tau)


def discriminator_slope(disc: DiscriminatorConfig, f_lock_hz: float) -> float:
    """Signed d(error)/df at a lock point; magnitude 2 pi V0 tau_d."""
    f0 = _nearest_lock_point(disc, f_lock_hz)
    if abs(f_lock_hz - f0) > 1e-6 * capture_halfwidth(disc):
        raise ParameterError(f"{f_lock_hz} Hz is not a lock point (nearest {f0} Hz)")
    magnitude = 2.0 * np.pi * disc.amplitude_v * disc.delay_s
    k = round((f0 * 4.0 * disc.delay_s - 1.0) / 2.0)
    return magnitude * (-disc.sign) * (1 if k % 2 == 0 else -1)


def capture_halfwidth(disc: DiscriminatorConfig) -> float:
    """Monotonic half-range around any lock point, 1/(4 tau_d)."""
    return 1.0 / (4.0 * disc.delay_s)


def thermal_lockpoint_shift(
    disc: DiscriminatorConfig, thermal: ThermalModel, t_s: float, f_lock_hz: float
) -> float:
    """Instantaneous lock-point frequency f_lock * tau_d(0) / tau_d(t)."""
    return f_lock_hz * disc.delay_s / thermal.delay_at(disc, t_s)


def servo_for_bandwidth(
    disc: DiscriminatorConfig,
    f_lock_hz: float,
    bandwidth_hz: float,
    update_dt_s: float = 1e-3,
    actuator_limit_hz: float = 50e6,
) -> ServoConfig:
    """Pure-integral gains giving a first-order closed loop of the given bandwidth."""
    if bandwidth_hz <= 0.0:
        raise ParameterError("bandwidth_hz must be > 0")
    slope = abs(discriminator_slope(disc, f_lock_hz))
    return ServoConfig(
        kp=0.0, ki=2.0 * np.pi * bandwidth_hz / slope,
        actuator_limit_hz=actuator_limit_hz, update_dt_s=update_dt_s,
    )


@dataclass(frozen=True)
class LockRun:
    """Sampled record of one closed-loop run; all traces share dt and length."""

    laser_offset_trace: FrequencyTrace
    inloop_beat_trace: FrequencyTrace
    error_trace: np.ndarray
    actuator_trace: np.ndarray
    lock_flag: np.ndarray
    thermal_lockpoint_trace: np.ndarray
    f_lock_hz: float
    status: dict
    config: dict

    def export(self, out_dir) -> List[str]:
        """Write trace CSVs and a lockrun.json summary; returns written paths."""
        os.makedirs(out_dir, exist_ok=True)
        written = []
        for name, trace in (
            ("laser_offset.csv", self.laser_offset_trace),
            ("inloop_beat.csv", self.inloop_beat_trace),
        ):
            path = os.path.join(out_dir, name)
            write_trace_csv(trace, path)
            written.append(path)
        for name, arr in (("error_v.csv", self.error_trace), ("actuator_hz.csv", self.actuator_trace)):
            path = os.path.join(out_dir, name)
            with open(path, "w") as fh:
                fh.write(f"# dt={self.laser_offset_trace.dt_s:.17g}\n")
                fh.writelines(f"{v:.17g}\n" for v in arr)
            written.append(path)
        path = os.path.join(out_dir, "lockrun.json")
        with open(path, "w") as fh:
            json.dump({"f_lock_hz": self.f_lock_hz, "status": self.status, "config": self.config},
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
        return written


def simulate_lock(
    laser: OscillatorModel,
    reference: OscillatorModel,
    disc: DiscriminatorConfig,
    servo: ServoConfig,
    f_lock_hz: float,
    duration_s: float,
    dt_s: float,
    seed: int,
    thermal: Optional[ThermalModel] = None,
    initial_beat_offset_hz: float = 0.0,
) -> LockRun:
    """Time-step the closed loop: free-run noise plus PI actuator correction.

    The beat is tracked signed (laser minus reference line) and folded to
    magnitude at the discriminator.  The servo consumes the error voltage
    averaged over the preceding update interval (integrate-and-dump, the
    anti-aliasing a real mixer low-pass provides); the actuator is held
    between updates.  An unstable run (actuator railed more than half the
    time) is reported in the status block, not raised.
    """
    if dt_s <= 0.0:
        raise ParameterError("dt must be > 0")
    if dt_s > servo.update_dt_s * (1.0 + 1e-9):
        raise ParameterError("dt must not exceed servo.update_dt_s")
    stride = int(round(servo.update_dt_s / dt_s))
    if abs(stride * dt_s - servo.update_dt_s) > 1e-6 * servo.update_dt_s:
        raise ParameterError("servo.update_dt_s must be an integer multiple of dt")
    if duration_s < 2.0 * dt_s:
        raise ParameterError("duration must be at least 2*dt")
    f0 = _nearest_lock_point(disc, f_lock_hz)
    if abs(f_lock_hz - f0) > 1e-6 * capture_halfwidth(disc):
        raise ParameterError(f"f_lock={f_lock_hz} Hz is not a lock point of the discriminator")
    slope_signed = discriminator_slope(disc, f0)
    fb = 1.0 if slope_signed > 0 else -1.0  # negative feedback for either slope sign
    slope = abs(slope_signed)
    implied_bw = slope * (abs(servo.ki) / (2.0 * np.pi)
                          + abs(servo.kp) / (2.0 * np.pi * servo.update_dt_s))
    if implied_bw >= 1.0 / (10.0 * dt_s):
        raise ParameterError("servo gains imply a loop bandwidth above the 1/(10 dt) guard")

    n = int(round(duration_s / dt_s))
    laser_free = oscillator_trace(laser, duration_s, dt_s, derive_seed(seed, "laser")).samples
    ref_free = oscillator_trace(reference, duration_s, dt_s, derive_seed(seed, "reference")).samples

    beat0 = laser.nominal_hz - reference.nominal_hz
    polarity = 1.0 if beat0 >= 0 else -1.0
    base = float(beat0) + initial_beat_offset_hz + laser_free - ref_free

    n_upd = (n + stride - 1) // stride
    if disc.noise_v2_per_hz > 0.0:
        rng = np.random.default_rng(derive_seed(seed, "detector"))
        v_noise = rng.standard_normal(n_upd) * math.sqrt(
            disc.noise_v2_per_hz / (2.0 * servo.update_dt_s))
    else:
        v_noise = np.zeros(n_upd)

    beat_signed = np.empty(n)
    act_arr = np.empty(n)
    err_arr = np.empty(n)
    lockpoint_arr = np.empty(n)
    halfwidth_arr = np.empty(n)

    act_cmd = 0.0  # correction in beat-frequency frame, Hz
    integ = 0.0
    limit = servo.actuator_limit_hz
    railed_updates = 0
    for j in range(n_upd):
        k0 = j * stride
        k1 = min(k0 + stride, n)
        t = k0 * dt_s
        tau_d = thermal.delay_at(disc, t) if thermal is not None else disc.delay_s
        if j == 0:
            f_abs = np.abs(base[k0:k0 + 1] + polarity * act_cmd)
        else:
            f_abs = np.abs(beat_signed[k0 - stride:k0])
        e = float(np.mean(error_signal(f_abs, disc, delay_s=tau_d))) + v_noise[j]
        integ += e * servo.update_dt_s
        u = servo.kp * e + servo.ki * integ
        act_cmd = -fb * u
        if abs(act_cmd) > limit:
            act_cmd = math.copysign(limit, act_cmd)
            if servo.ki != 0.0:  # anti-windup: pin the integrator at the rail
                integ = (-fb * act_cmd - servo.kp * e) / servo.ki
            railed_updates += 1
        beat_signed[k0:k1] = base[k0:k1] + polarity * act_cmd
        act_arr[k0:k1] = polarity * act_cmd
        err_arr[k0:k1] = e
        lockpoint_arr[k0:k1] = f0 * disc.delay_s / tau_d
        halfwidth_arr[k0:k1] = 1.0 / (4.0 * tau_d)

    f_abs_arr = np.abs(beat_signed)
    lock_flag = np.abs(f_abs_arr - lockpoint_arr) <= halfwidth_arr
    rail_fraction = railed_updates / n_upd
    beat_nominal = int(round(f0))

    status = {
        "lock_fraction": float(np.mean(lock_flag)),
        "mean_beat_hz": float(np.mean(f_abs_arr)),
        "actuator_rail_fraction": float(rail_fraction),
        "unstable": bool(rail_fraction > 0.5),
    }
    config = {
        "f_lock_hz": f0,
        "duration_s": duration_s,
        "dt_s": dt_s,
        "seed": int(seed),
        "discriminator": {
            "delay_s": disc.delay_s, "amplitude_v": disc.amplitude_v, "sign": disc.sign,
            "bandpass_center_hz": disc.bandpass_center_hz,
            "bandpass_halfwidth_hz": disc.bandpass_halfwidth_hz,
            "noise_v2_per_hz": disc.noise_v2_per_hz,
        },
        "servo": {"kp": servo.kp, "ki": servo.ki,
                  "actuator_limit_hz": servo.actuator_limit_hz,
                  "update_dt_s": servo.update_dt_s},
    }
    return LockRun(
        laser_offset_trace=FrequencyTrace(
            nominal_hz=laser.nominal_hz, dt_s=dt_s, samples=laser_free + act_arr, seed=int(seed)),
        inloop_beat_trace=FrequencyTrace(
            nominal_hz=beat_nominal, dt_s=dt_s, samples=f_abs_arr - beat_nominal, seed=int(seed)),
        error_trace=err_arr,
        actuator_trace=act_arr,
        lock_flag=lock_flag,
        thermal_lockpoint_trace=lockpoint_arr,
        f_lock_hz=f0,
        status=status,
        config=config,
    )


def _one_pole_lowpass(x: np.ndarray, bandwidth_hz: float, dt_s: float) -> np.ndarray:
    # Causal single-pole IIR; steady start at x[0] avoids a spurious step.
    a = 1.0 - math.exp(-2.0 * np.pi * bandwidth_hz * dt_s)
    y, _ = lfilter([a], [1.0, a - 1.0], x, zi=[(1.0 - a) * x[0]])
    return y


def closed_loop_components(
    laser: OscillatorModel,
    reference: OscillatorModel,
    loop_bandwidth_hz: float,
    duration_s: float,
    dt_s: float,
    seed: int,
    detection_noise_hz2_per_hz: float = 0.0,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Spectral-model building blocks: (locked laser offsets, reference offsets, laser free-run).

    Locked = lowpass(reference + detection noise) + highpass(laser free-run),
    with complementary first-order responses at the loop bandwidth.
    """
    if not 0.0 < loop_bandwidth_hz < 1.0 / (2.0 * dt_s):
        raise ParameterError("loop bandwidth must lie in (0, Nyquist)")
    laser_free = oscillator_trace(laser, duration_s, dt_s, derive_seed(seed, "laser")).samples
    ref_free = oscillator_trace(reference, duration_s, dt_s, derive_seed(seed, "reference")).samples
    seen = ref_free
    if detection_noise_hz2_per_hz > 0.0:
        det = synth_power_law(
            NoiseSpec(h_coeffs={0: detection_noise_hz2_per_hz}),
            duration_s, dt_s, derive_seed(seed, "detector")).samples
        seen = ref_free + det
    lp = _one_pole_lowpass(seen, loop_bandwidth_hz, dt_s)
    hp = laser_free - _one_pole_lowpass(laser_free, loop_bandwidth_hz, dt_s)
    return lp + hp, ref_free, laser_free


def spectral_lock(
    laser: OscillatorModel,
    reference: OscillatorModel,
    loop_bandwidth_hz: float,
    duration_s: float,
    dt_s: float,
    seed: int,
    detection_noise_hz2_per_hz: float = 0.0,
) -> FrequencyTrace:
    """Fast-path closed-loop model for long runs (single-pole noise shaping).

    Returns the locked laser's offsets from its own nominal; agrees with
    :func:`simulate_lock` in distribution when the PI gains correspond to
    the same first-order bandwidth.
    """
    locked, _, _ = closed_loop_components(
        laser, reference, loop_bandwidth_hz, duration_s, dt_s, seed,
        detection_noise_hz2_per_hz=detection_noise_hz2_per_hz)
    return FrequencyTrace(nominal_hz=laser.nominal_hz, dt_s=dt_s, samples=locked, seed=int(seed))


def out_of_loop_beat(locked: FrequencyTrace, independent_ref: FrequencyTrace) -> FrequencyTrace:
    """Beat of a locked trace against an independent reference trace.

    Sample-wise difference of absolute offsets, rebased to the nominal beat
    frequency |nu_locked - nu_ref|.
    """
    if abs(locked.dt_s - independent_ref.dt_s) > 1e-12 * locked.dt_s:
        raise ParameterError("traces must share dt")
    if len(locked) != len(independent_ref):
        raise ParameterError("traces must share length")
    polarity = 1.0 if locked.nominal_hz >= independent_ref.nominal_hz else -1.0
    samples = polarity * (locked.samples - independent_ref.samples)
    return FrequencyTrace(
        nominal_hz=abs(locked.nominal_hz - independent_ref.nominal_hz),
        dt_s=locked.dt_s, samples=samples, seed=locked.seed,
    )
