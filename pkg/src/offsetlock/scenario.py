"""Config-driven scenario runner: synthesis -> lock -> count -> statistics.

A scenario JSON names oscillators/combs, lock blocks, measurements and
expectation envelopes; running it emits counter-series and Allan CSVs plus
a report JSON with one verdict per expectation.  Runs are deterministic
per seed: re-running a config produces byte-identical CSV artifacts.
"""
from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import chain as chainmod
from .errors import ParameterError
from .lockloop import (
    DiscriminatorConfig,
    ServoConfig,
    ThermalModel,
    cable_delay,
    capture_halfwidth,
    closed_loop_components,
    discriminator_slope,
    linear_ramp,
    lock_points,
    out_of_loop_beat,
    servo_for_bandwidth,
    simulate_lock,
)
from .metrology import (
    UNITS_FRACTIONAL,
    UNITS_HZ,
    AllanResult,
    CounterConfig,
    adev_nonoverlapping,
    adev_overlapping,
    count,
    octave_taus,
    peak_to_peak,
    to_fractional,
    write_allan_csv,
    write_series_csv,
)
from .noisegen import (
    CombModel,
    FrequencyTrace,
    NoiseSpec,
    OscillatorModel,
    comb_line_oscillator,
    derive_seed,
    laser_from_linewidth,
    oscillator_trace,
)

OUT_DIR_ENV = "OLS_OUT_DIR"
DEFAULT_TIME_DOMAIN_CAP_S = 60.0


# ---------------------------------------------------------------------------
# Config parsing helpers (shared with the CLI)

def noise_spec_from_dict(d: dict) -> NoiseSpec:
    return NoiseSpec(
        h_coeffs={int(a): float(h) for a, h in d.get("h", {}).items()},
        drift_rate=float(d.get("drift_rate_hz_per_s", 0.0)),
        drift_random_walk=float(d.get("drift_random_walk", 0.0)),
    )


def oscillator_from_dict(d: dict) -> OscillatorModel:
    nominal = int(d["nominal_hz"])
    profile = d.get("adev_profile")
    if "linewidth_hz" in d:
        model = laser_from_linewidth(
            nominal, float(d["linewidth_hz"]),
            drift_rate=float(d.get("drift_rate_hz_per_s", 0.0)),
            random_walk=float(d.get("drift_random_walk", 0.0)),
        )
        if profile is not None:
            model = OscillatorModel(nominal, model.noise, tuple(map(tuple, profile)))
        return model
    noise = noise_spec_from_dict(d.get("noise", {}))
    return OscillatorModel(
        nominal_hz=nominal, noise=noise,
        adev_profile=tuple(map(tuple, profile)) if profile is not None else None,
    )


def comb_from_dict(d: dict) -> CombModel:
    ref = d.get("reference_noise")
    profile = d.get("adev_profile")
    return CombModel(
        f_rep_hz=int(d["f_rep_hz"]),
        f_ceo_hz=int(d.get("f_ceo_hz", 0)),
        reference_noise=noise_spec_from_dict(ref) if ref is not None else None,
        adev_profile=tuple(map(tuple, profile)) if profile is not None else None,
    )


def discriminator_from_dict(d: dict) -> DiscriminatorConfig:
    if "delay_s" in d:
        delay = float(d["delay_s"])
    else:
        delay = cable_delay(float(d["cable_m"]), float(d.get("velocity_factor", 0.66)))
    return DiscriminatorConfig(
        delay_s=delay,
        amplitude_v=float(d.get("amplitude_v", 1.0)),
        sign=int(d.get("sign", 1)),
        bandpass_center_hz=float(d.get("bandpass_center_hz", 30e6)),
        bandpass_halfwidth_hz=float(d.get("bandpass_halfwidth_hz", 15e6)),
        noise_v2_per_hz=float(d.get("noise_v2_per_hz", 0.0)),
    )


def thermal_from_dict(d: dict) -> ThermalModel:
    if "ramp_K_per_s" in d:
        profile = linear_ramp(float(d["ramp_K_per_s"]))
    else:
        profile = (list(map(float, d["times_s"])), list(map(float, d["temps_K"])))
    return ThermalModel(tempco_per_K=float(d["tempco_per_K"]), temperature_profile=profile)


@dataclass(frozen=True)
class LockBlock:
    id: str
    laser: str
    comb: str
    f_lock_hz: float
    disc: DiscriminatorConfig
    fidelity: str  # "spectral" | "time-domain"
    loop_bandwidth_hz: Optional[float] = None
    servo: Optional[ServoConfig] = None
    thermal: Optional[ThermalModel] = None


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    seed: int
    duration_s: float
    dt_s: float
    oscillators: Dict[str, OscillatorModel]
    combs: Dict[str, CombModel]
    locks: List[LockBlock]
    measurements: List[dict]
    chain: Optional[dict]
    expectations: Dict[str, Tuple[float, float]]
    time_domain_cap_s: float = DEFAULT_TIME_DOMAIN_CAP_S
    raw: dict = field(default_factory=dict)


_MEASUREMENT_KINDS = ("peak_to_peak", "adev", "adev_ratio_max")


def _check_signal(sig, cfg_locks, cfg_osc, cfg_combs, path, errors):
    parts = str(sig).split(":")
    kind = parts[0] if parts else ""
    if kind == "freerun" and len(parts) == 2:
        if parts[1] not in cfg_osc:
            errors.append(f"{path}: unknown oscillator {parts[1]!r}")
    elif kind in ("locked", "inloop") and len(parts) == 2:
        if parts[1] not in cfg_locks:
            errors.append(f"{path}: unknown lock id {parts[1]!r}")
    elif kind == "outofloop" and len(parts) == 3:
        if parts[1] not in cfg_locks:
            errors.append(f"{path}: unknown lock id {parts[1]!r}")
        if parts[2] not in cfg_osc and parts[2] not in cfg_combs:
            errors.append(f"{path}: unknown out-of-loop reference {parts[2]!r}")
    else:
        errors.append(f"{path}: malformed signal {sig!r}")


def validate_config(raw) -> Tuple[Optional[ScenarioConfig], List[str]]:
    """Full structural and referential validation; all errors reported at once."""
    errors: List[str] = []
    if isinstance(raw, (str, bytes)):
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            return None, [f"$: invalid JSON ({exc})"]
    else:
        doc = raw
    if not isinstance(doc, dict):
        return None, ["$: config must be a JSON object"]

    name = doc.get("name")
    if not isinstance(name, str) or not name:
        errors.append("name: required non-empty string")
        name = "unnamed"
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        errors.append("seed: must be an integer")
        seed = 0
    duration = doc.get("duration_s")
    if not isinstance(duration, (int, float)) or duration <= 0:
        errors.append("duration_s: must be a positive number")
        duration = 1.0
    dt = doc.get("dt_s")
    if not isinstance(dt, (int, float)) or dt <= 0:
        errors.append("dt_s: must be a positive number")
        dt = 1.0
    elif duration < 2 * dt:
        errors.append("duration_s: must be at least 2*dt_s")
    cap = float(doc.get("time_domain_cap_s", DEFAULT_TIME_DOMAIN_CAP_S))

    oscillators: Dict[str, OscillatorModel] = {}
    for oname, od in doc.get("oscillators", {}).items():
        try:
            oscillators[oname] = oscillator_from_dict(od)
        except (ParameterError, KeyError, TypeError, ValueError) as exc:
            errors.append(f"oscillators.{oname}: {exc}")
    combs: Dict[str, CombModel] = {}
    for cname, cd in doc.get("combs", {}).items():
        try:
            combs[cname] = comb_from_dict(cd)
        except (ParameterError, KeyError, TypeError, ValueError) as exc:
            errors.append(f"combs.{cname}: {exc}")

    locks: List[LockBlock] = []
    lock_ids = set()
    for i, ld in enumerate(doc.get("locks", [])):
        path = f"locks[{i}]"
        lid = ld.get("id", f"lock{i}")
        if lid in lock_ids:
            errors.append(f"{path}.id: duplicate lock id {lid!r}")
        lock_ids.add(lid)
        if ld.get("laser") not in oscillators:
            errors.append(f"{path}.laser: unknown oscillator {ld.get('laser')!r}")
        if ld.get("comb") not in combs:
            errors.append(f"{path}.comb: unknown comb {ld.get('comb')!r}")
        fidelity = ld.get("fidelity", "spectral")
        if fidelity not in ("spectral", "time-domain"):
            errors.append(f"{path}.fidelity: must be 'spectral' or 'time-domain'")
        if fidelity == "time-domain" and duration > cap:
            errors.append(f"{path}: time-domain fidelity requires duration_s <= {cap}")
        try:
            disc = discriminator_from_dict(ld.get("discriminator", {}))
        except (ParameterError, KeyError, TypeError, ValueError) as exc:
            errors.append(f"{path}.discriminator: {exc}")
            continue
        bw = ld.get("loop_bandwidth_hz")
        servo = None
        if ld.get("servo") is not None:
            try:
                sd = ld["servo"]
                servo = ServoConfig(
                    kp=float(sd.get("kp", 0.0)), ki=float(sd.get("ki", 0.0)),
                    actuator_limit_hz=float(sd.get("actuator_limit_hz", 50e6)),
                    update_dt_s=float(sd.get("update_dt_s", 1e-3)),
                )
            except (ParameterError, TypeError, ValueError) as exc:
                errors.append(f"{path}.servo: {exc}")
        if fidelity == "spectral":
            if not isinstance(bw, (int, float)) or bw <= 0:
                errors.append(f"{path}.loop_bandwidth_hz: required positive number for spectral fidelity")
            elif bw >= 1.0 / (2.0 * dt):
                errors.append(f"{path}.loop_bandwidth_hz: must be below Nyquist 1/(2*dt_s)")
        elif servo is None and not isinstance(bw, (int, float)):
            errors.append(f"{path}: time-domain lock needs 'servo' gains or 'loop_bandwidth_hz'")
        thermal = None
        if ld.get("thermal") is not None:
            try:
                thermal = thermal_from_dict(ld["thermal"])
            except (ParameterError, KeyError, TypeError, ValueError) as exc:
                errors.append(f"{path}.thermal: {exc}")
        f_lock = ld.get("f_lock_hz")
        if not isinstance(f_lock, (int, float)) or f_lock <= 0:
            errors.append(f"{path}.f_lock_hz: required positive number")
            f_lock = 1.0
        locks.append(LockBlock(
            id=lid, laser=ld.get("laser", ""), comb=ld.get("comb", ""),
            f_lock_hz=float(f_lock), disc=disc, fidelity=fidelity,
            loop_bandwidth_hz=float(bw) if isinstance(bw, (int, float)) else None,
            servo=servo, thermal=thermal,
        ))

    measurements: List[dict] = []
    stat_ids = set()
    for i, md in enumerate(doc.get("measurements", [])):
        path = f"measurements[{i}]"
        mid = md.get("id")
        if not isinstance(mid, str) or not mid:
            errors.append(f"{path}.id: required non-empty string")
            mid = f"m{i}"
        if mid in stat_ids:
            errors.append(f"{path}.id: duplicate measurement id {mid!r}")
        stat_ids.add(mid)
        kind = md.get("kind")
        if kind not in _MEASUREMENT_KINDS:
            errors.append(f"{path}.kind: must be one of {_MEASUREMENT_KINDS}")
            continue
        _check_signal(md.get("signal"), lock_ids, oscillators, combs, f"{path}.signal", errors)
        gate = md.get("gate_s", 1.0)
        if not isinstance(gate, (int, float)) or gate <= 0:
            errors.append(f"{path}.gate_s: must be a positive number")
        elif abs(round(gate / dt) * dt - gate) > 1e-6 * gate or round(gate / dt) < 1:
            errors.append(f"{path}.gate_s: must be an integer multiple of dt_s")
        if kind in ("adev", "adev_ratio_max"):
            taus = md.get("taus_s", "octave")
            if taus != "octave" and not (isinstance(taus, list) and taus
                                         and all(isinstance(t, (int, float)) for t in taus)):
                errors.append(f"{path}.taus_s: must be 'octave' or a list of numbers")
        if kind == "adev":
            units = md.get("units", UNITS_HZ)
            if units not in (UNITS_HZ, UNITS_FRACTIONAL):
                errors.append(f"{path}.units: must be '{UNITS_HZ}' or '{UNITS_FRACTIONAL}'")
            if units == UNITS_FRACTIONAL and md.get("fractional_ref") not in oscillators:
                errors.append(f"{path}.fractional_ref: unknown oscillator "
                              f"{md.get('fractional_ref')!r} (required for fractional units)")
            if md.get("estimator", "overlapping") not in ("overlapping", "non-overlapping"):
                errors.append(f"{path}.estimator: must be 'overlapping' or 'non-overlapping'")
        if kind == "adev_ratio_max":
            _check_signal(md.get("baseline"), lock_ids, oscillators, combs,
                          f"{path}.baseline", errors)
        measurements.append(dict(md, id=mid))

    chain_doc = doc.get("chain")
    if chain_doc is not None:
        for stat in ("chain_nominal_hz", "chain_sigma_abs_hz",
                     "chain_stability_pass", "chain_offset_pass"):
            stat_ids.add(stat)

    expectations: Dict[str, Tuple[float, float]] = {}
    for sid, env in doc.get("expectations", {}).items():
        path = f"expectations.{sid}"
        if sid not in stat_ids:
            errors.append(f"{path}: no measurement produces statistic {sid!r}")
            continue
        if (not isinstance(env, list) or len(env) != 2
                or not all(isinstance(v, (int, float)) for v in env)):
            errors.append(f"{path}: envelope must be [min, max]")
            continue
        if env[0] > env[1]:
            errors.append(f"{path}: envelope min exceeds max")
            continue
        expectations[sid] = (float(env[0]), float(env[1]))

    if errors:
        return None, errors
    return ScenarioConfig(
        name=name, seed=seed, duration_s=float(duration), dt_s=float(dt),
        oscillators=oscillators, combs=combs, locks=locks,
        measurements=measurements, chain=chain_doc, expectations=expectations,
        time_domain_cap_s=cap, raw=doc,
    ), []


def load_config(path) -> ScenarioConfig:
    with open(path) as fh:
        cfg, errors = validate_config(fh.read())
    if errors:
        raise ParameterError(f"{path}: " + "; ".join(errors))
    return cfg


@dataclass
class RunReport:
    name: str
    statistics: Dict[str, float]
    verdicts: Dict[str, bool]
    overall_pass: bool
    unchecked: bool
    manifest: List[str]
    config_echo: dict
    wall_time_s: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "statistics": self.statistics,
            "verdicts": self.verdicts,
            "overall_pass": self.overall_pass,
            "unchecked": self.unchecked,
            "manifest": self.manifest,
            "config_echo": self.config_echo,
            "wall_time_s": self.wall_time_s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(
            name=d["name"], statistics=d["statistics"], verdicts=d["verdicts"],
            overall_pass=d["overall_pass"], unchecked=d.get("unchecked", False),
            manifest=d.get("manifest", []), config_echo=d.get("config_echo", {}),
            wall_time_s=d.get("wall_time_s", 0.0),
        )


class _LockResult:
    def __init__(self, locked_trace, inloop_trace, line_nominal, f_lock_hz, status):
        self.locked_trace = locked_trace
        self.inloop_trace = inloop_trace
        self.line_nominal = line_nominal
        self.f_lock_hz = f_lock_hz
        self.status = status


def resolve_comb_line(laser: OscillatorModel, comb: CombModel) -> Tuple[int, int]:
    """(line index, |beat| Hz) of the comb line nearest the laser carrier."""
    n, f_beat = chainmod.comb_beat(laser.nominal_hz, comb)
    return n, f_beat


def execute_lock(cfg: ScenarioConfig, block: LockBlock) -> _LockResult:
    laser = cfg.oscillators[block.laser]
    comb = cfg.combs[block.comb]
    n, f_beat = resolve_comb_line(laser, comb)
    line = comb_line_oscillator(comb, n)
    seed = derive_seed(cfg.seed, f"lock:{block.id}")
    pts = lock_points(block.disc, 0.0, block.f_lock_hz * 2.0 + 1.0 / block.disc.delay_s)
    if not pts:
        raise ParameterError(f"lock {block.id}: no lock point near f_lock")
    f0 = min((p.f_hz for p in pts), key=lambda f: abs(f - block.f_lock_hz))
    if block.fidelity == "time-domain":
        servo = block.servo
        if servo is None:
            servo = servo_for_bandwidth(block.disc, f0, block.loop_bandwidth_hz)
        run = simulate_lock(
            laser, line, block.disc, servo, f0, cfg.duration_s, cfg.dt_s, seed,
            thermal=block.thermal,
            initial_beat_offset_hz=0.0,
        )
        return _LockResult(run.laser_offset_trace, run.inloop_beat_trace,
                           line.nominal_hz, f0, run.status)
    slope = abs(discriminator_slope(block.disc, f0))
    det_hz2 = block.disc.noise_v2_per_hz / slope**2
    locked_off, ref_off, _ = closed_loop_components(
        laser, line, block.loop_bandwidth_hz, cfg.duration_s, cfg.dt_s, seed,
        detection_noise_hz2_per_hz=det_hz2)
    polarity = 1.0 if laser.nominal_hz >= line.nominal_hz else -1.0
    locked_trace = FrequencyTrace(nominal_hz=laser.nominal_hz, dt_s=cfg.dt_s,
                                  samples=locked_off, seed=seed)
    inloop_trace = FrequencyTrace(nominal_hz=int(f_beat), dt_s=cfg.dt_s,
                                  samples=polarity * (locked_off - ref_off), seed=seed)
    status = {"model": "spectral", "loop_bandwidth_hz": block.loop_bandwidth_hz,
              "f_lock_hz": f0, "comb_line": n}
    return _LockResult(locked_trace, inloop_trace, line.nominal_hz, f0, status)


def _reference_trace(cfg: ScenarioConfig, lock_result: _LockResult, block: LockBlock,
                     ref_name: str) -> FrequencyTrace:
    if ref_name in cfg.combs:
        comb = cfg.combs[ref_name]
        laser = cfg.oscillators[block.laser]
        n, _ = resolve_comb_line(laser, comb)
        line = comb_line_oscillator(comb, n)
        return oscillator_trace(line, cfg.duration_s, cfg.dt_s,
                                derive_seed(cfg.seed, f"freerun:{ref_name}:line{n}"))
    osc = cfg.oscillators[ref_name]
    return oscillator_trace(osc, cfg.duration_s, cfg.dt_s,
                            derive_seed(cfg.seed, f"freerun:{ref_name}"))


def run_scenario(cfg: ScenarioConfig, out_dir: Optional[str] = None) -> RunReport:
    """Execute a validated scenario; writes artifacts and returns the report."""
    t_start = time.monotonic()
    if out_dir is None:
        root = os.environ.get(OUT_DIR_ENV, "runs")
        out_dir = os.path.join(root, cfg.name)
    try:
        os.makedirs(out_dir, exist_ok=True)
        probe = os.path.join(out_dir, ".writable")
        with open(probe, "w"):
            pass
        os.remove(probe)
    except OSError as exc:
        raise ParameterError(f"output directory {out_dir!r} is not writable: {exc}")

    manifest: List[str] = []
    lock_results: Dict[str, _LockResult] = {}
    blocks = {b.id: b for b in cfg.locks}
    for block in cfg.locks:
        lock_results[block.id] = execute_lock(cfg, block)

    trace_cache: Dict[str, FrequencyTrace] = {}

    def signal_trace(sig: str) -> FrequencyTrace:
        if sig in trace_cache:
            return trace_cache[sig]
        parts = sig.split(":")
        if parts[0] == "freerun":
            osc = cfg.oscillators[parts[1]]
            tr = oscillator_trace(osc, cfg.duration_s, cfg.dt_s,
                                  derive_seed(cfg.seed, f"freerun:{parts[1]}"))
        elif parts[0] == "locked":
            tr = lock_results[parts[1]].locked_trace
        elif parts[0] == "inloop":
            tr = lock_results[parts[1]].inloop_trace
        elif parts[0] == "outofloop":
            lr = lock_results[parts[1]]
            ref = _reference_trace(cfg, lr, blocks[parts[1]], parts[2])
            tr = out_of_loop_beat(lr.locked_trace, ref)
        else:  # unreachable after validation
            raise ParameterError(f"malformed signal {sig!r}")
        trace_cache[sig] = tr
        return tr

    def compute_adev(md: dict, sig: str) -> AllanResult:
        gate = float(md.get("gate_s", 1.0))
        series = count(signal_trace(sig), CounterConfig(gate_s=gate))
        taus = md.get("taus_s", "octave")
        if taus == "octave":
            taus = octave_taus(gate, series.span_s)
        estimator = md.get("estimator", "overlapping")
        fn = adev_overlapping if estimator == "overlapping" else adev_nonoverlapping
        return fn(series, taus)

    statistics: Dict[str, float] = {}
    for md in cfg.measurements:
        mid = md["id"]
        kind = md["kind"]
        sig = md["signal"]
        gate = float(md.get("gate_s", 1.0))
        series = count(signal_trace(sig), CounterConfig(gate_s=gate))
        series_path = os.path.join(out_dir, f"{mid}_series.csv")
        write_series_csv(series, series_path)
        manifest.append(os.path.basename(series_path))
        if kind == "peak_to_peak":
            statistics[mid] = peak_to_peak(series, md.get("window_s"))
        elif kind == "adev":
            result = compute_adev(md, sig)
            if md.get("units", UNITS_HZ) == UNITS_FRACTIONAL:
                nominal = cfg.oscillators[md["fractional_ref"]].nominal_hz
                result = to_fractional(result, nominal)
            adev_path = os.path.join(out_dir, f"{mid}_adev.csv")
            write_allan_csv(result, adev_path)
            manifest.append(os.path.basename(adev_path))
            pick = md.get("pick_tau_s")
            if pick is not None:
                statistics[mid] = result.sigma_at(float(pick))
        elif kind == "adev_ratio_max":
            num = compute_adev(md, sig)
            den = compute_adev(md, md["baseline"])
            shared = [t for t in num.taus_s if any(np.isclose(t, den.taus_s))]
            ratios = [num.sigma_at(t) / den.sigma_at(t) for t in shared if den.sigma_at(t) > 0]
            if not ratios:
                raise ParameterError(f"measurement {mid}: no shared taus with baseline")
            statistics[mid] = float(max(ratios))

    if cfg.chain is not None:
        chain_result = chainmod.evaluate_chain(cfg.chain)
        chain_path = os.path.join(out_dir, "chain_budget.json")
        with open(chain_path, "w") as fh:
            json.dump(chain_result, fh, indent=2, sort_keys=True)
            fh.write("\n")
        manifest.append(os.path.basename(chain_path))
        budget = chain_result.get("budget")
        if budget is not None:
            statistics["chain_nominal_hz"] = float(budget["node"]["nominal_hz"])
            statistics["chain_sigma_abs_hz"] = float(budget["node"]["sigma_abs_hz"])
            statistics["chain_stability_pass"] = 1.0 if budget["stability_pass"] else 0.0
            statistics["chain_offset_pass"] = 1.0 if budget["offset_pass"] else 0.0

    verdicts = {}
    for sid, (lo, hi) in cfg.expectations.items():
        if sid not in statistics:
            raise ParameterError(f"expectation {sid!r} has no computed statistic")
        v = statistics[sid]
        verdicts[sid] = bool(lo <= v <= hi)  # closed interval: endpoints pass

    for lid, lr in lock_results.items():
        path = os.path.join(out_dir, f"{lid}_lockrun.json")
        with open(path, "w") as fh:
            json.dump({"f_lock_hz": lr.f_lock_hz, "line_nominal_hz": lr.line_nominal,
                       "status": lr.status}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        manifest.append(os.path.basename(path))

    report = RunReport(
        name=cfg.name,
        statistics=statistics,
        verdicts=verdicts,
        overall_pass=all(verdicts.values()) if verdicts else True,
        unchecked=not verdicts,
        manifest=manifest,
        config_echo=cfg.raw,
        wall_time_s=time.monotonic() - t_start,
    )
    report_path = os.path.join(out_dir, "report.json")
    with open(report_path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    report.manifest.append(os.path.basename(report_path))
    return report


def compare_expected(report) -> Tuple[int, dict]:
    """Exit status and machine-readable verdict for a completed report."""
    if isinstance(report, RunReport):
        rep = report
    else:
        rep = RunReport.from_dict(report)
    verdict = {
        "name": rep.name,
        "overall_pass": rep.overall_pass,
        "unchecked": rep.unchecked,
        "failed": sorted(sid for sid, ok in rep.verdicts.items() if not ok),
        "statistics": rep.statistics,
    }
    return (0 if rep.overall_pass else 1), verdict


def expand_seeds(doc: dict, n_seeds: int) -> List[dict]:
    """One scenario = one seed; ensembles are N configs with derived seeds."""
    if n_seeds < 1:
        raise ParameterError("n_seeds must be >= 1")
    base = int(doc.get("seed", 0))
    out = []
    for i in range(n_seeds):
        d = dict(doc)
        d["seed"] = base + i
        d["name"] = f"{doc.get('name', 'scenario')}_seed{base + i}"
        out.append(d)
    return out
