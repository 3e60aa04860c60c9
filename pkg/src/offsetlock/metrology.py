"""Gated-counter emulation and frequency-stability statistics.

Counter readings are plain (Pi-type) means over each gate; stability is
summarized with the two-sample (Allan) standard deviation, either
overlapping or non-overlapping, in absolute Hz or fractional form.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ParameterError
from .noisegen import FrequencyTrace

UNITS_HZ = "hz"
UNITS_FRACTIONAL = "fractional"


@dataclass(frozen=True)
class CounterConfig:
    """Pi-type frequency counter: reading = mean frequency over each gate."""

    gate_s: float
    dead_time_s: float = 0.0
    mode: str = "pi"

    def __post_init__(self):
        if self.gate_s <= 0.0:
            raise ParameterError("gate_s must be > 0")
        if self.dead_time_s < 0.0:
            raise ParameterError("dead_time_s must be >= 0")
        if self.mode != "pi":
            raise ParameterError(f"unsupported counter mode {self.mode!r}")


@dataclass(frozen=True)
class CounterSeries:
    nominal_hz: int
    gate_s: float
    readings: np.ndarray

    def __post_init__(self):
        readings = np.asarray(self.readings, dtype=float)
        if readings.ndim != 1 or readings.size < 1:
            raise ParameterError("readings must be a nonempty 1-d sequence")
        if self.gate_s <= 0.0:
            raise ParameterError("gate_s must be > 0")
        object.__setattr__(self, "nominal_hz", int(self.nominal_hz))
        object.__setattr__(self, "readings", readings)

    @property
    def span_s(self) -> float:
        return self.gate_s * self.readings.size


@dataclass(frozen=True)
class AllanResult:
    """(tau, sigma, n_pairs) triples from a two-sample deviation estimate."""

    taus_s: np.ndarray
    sigmas: np.ndarray
    n_pairs: np.ndarray
    units: str
    estimator: str
    omitted_taus_s: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "taus_s", np.asarray(self.taus_s, dtype=float))
        object.__setattr__(self, "sigmas", np.asarray(self.sigmas, dtype=float))
        object.__setattr__(self, "n_pairs", np.asarray(self.n_pairs, dtype=int))

    def sigma_at(self, tau_s: float) -> float:
        idx = np.nonzero(np.isclose(self.taus_s, tau_s, rtol=1e-9))[0]
        if idx.size == 0:
            raise ParameterError(f"no ADEV point at tau={tau_s}")
        return float(self.sigmas[idx[0]])

    def relative_error(self) -> np.ndarray:
        """1/sqrt(n_pairs) relative confidence band."""
        return 1.0 / np.sqrt(np.maximum(self.n_pairs, 1))


@dataclass(frozen=True)
class SlopeFit:
    tau_range_s: Tuple[float, float]
    slope: float
    intercept: float
    residual: float


def write_series_csv(series: CounterSeries, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# nominal_hz={series.nominal_hz} gate_s={series.gate_s:.17g}\n")
        fh.writelines(f"{v:.17g}\n" for v in series.readings)


_SERIES_HEADER = re.compile(r"#\s*nominal_hz=(-?\d+)\s+gate_s=(\S+)")


def read_series_csv(path) -> CounterSeries:
    with open(path) as fh:
        m = _SERIES_HEADER.match(fh.readline())
        if not m:
            raise ParameterError(f"{path}: not a CounterSeries CSV")
        readings = np.loadtxt(fh, dtype=float, ndmin=1)
    return CounterSeries(nominal_hz=int(m.group(1)), gate_s=float(m.group(2)), readings=readings)


def write_allan_csv(result: AllanResult, path) -> None:
    with open(path, "w") as fh:
        fh.write("tau_s,sigma,units,n_pairs\n")
        for tau, sigma, n in zip(result.taus_s, result.sigmas, result.n_pairs):
            fh.write(f"{tau:.17g},{sigma:.17g},{result.units},{n}\n")


def read_allan_csv(path, estimator: str = "overlapping") -> AllanResult:
    taus, sigmas, pairs, units = [], [], [], UNITS_HZ
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "tau_s,sigma,units,n_pairs":
            raise ParameterError(f"{path}: not an AllanResult CSV")
        for line in fh:
            tau, sigma, units, n = line.strip().split(",")
            taus.append(float(tau))
            sigmas.append(float(sigma))
            pairs.append(int(n))
    return AllanResult(
        taus_s=np.array(taus), sigmas=np.array(sigmas), n_pairs=np.array(pairs),
        units=units, estimator=estimator,
    )


def _gate_samples(gate_s: float, dt_s: float) -> int:
    m = int(round(gate_s / dt_s))
    if m < 2:
        raise ParameterError("gate must span at least 2 samples")
    if abs(m * dt_s - gate_s) > 1e-6 * gate_s:
        raise ParameterError("gate_s must be an integer multiple of trace dt (no resampling)")
    return m


def count(trace: FrequencyTrace, cfg: CounterConfig) -> CounterSeries:
    """Apply a gated Pi counter to a trace; trailing partial gate discarded."""
    m = _gate_samples(cfg.gate_s, trace.dt_s)
    if cfg.dead_time_s > 0.0:
        dead = int(round(cfg.dead_time_s / trace.dt_s))
        if abs(dead * trace.dt_s - cfg.dead_time_s) > 1e-6 * cfg.dead_time_s:
            raise ParameterError("dead_time_s must be an integer multiple of trace dt")
        stride = m + dead
    else:
        stride = m
    n_gates = (trace.samples.size - m) // stride + 1
    if n_gates < 1:
        raise ParameterError("trace shorter than one gate")
    starts = stride * np.arange(n_gates)
    idx = starts[:, None] + np.arange(m)[None, :]
    readings = trace.samples[idx].mean(axis=1)
    return CounterSeries(nominal_hz=trace.nominal_hz, gate_s=cfg.gate_s, readings=readings)


def _tau_multiple(tau_s: float, gate_s: float) -> int:
    m = int(round(tau_s / gate_s))
    if m < 1 or abs(m * gate_s - tau_s) > 1e-9 * tau_s:
        raise ParameterError(f"tau={tau_s} is not a multiple of gate={gate_s}")
    return m


def adev_overlapping(series: CounterSeries, taus: Sequence[float]) -> AllanResult:
    """Overlapping Allan standard deviation.

    sigma^2(tau) = 0.5 * <(ybar_{k+m} - ybar_k)^2> over all overlapping
    starts k, with ybar_k the m-gate average beginning at reading k.
    Taus too large for the series are omitted and flagged, not raised.
    """
    y = series.readings
    c = np.concatenate([[0.0], np.cumsum(y)])
    out_t, out_s, out_n, omitted = [], [], [], []
    for tau in taus:
        m = _tau_multiple(tau, series.gate_s)
        if y.size < 2 * m:
            omitted.append(float(tau))
            continue
        avg = (c[m:] - c[:-m]) / m
        d = avg[m:] - avg[:-m]
        out_t.append(m * series.gate_s)
        out_s.append(float(np.sqrt(0.5 * np.mean(d * d))))
        out_n.append(d.size)
    return AllanResult(
        taus_s=np.array(out_t), sigmas=np.array(out_s), n_pairs=np.array(out_n),
        units=UNITS_HZ, estimator="overlapping", omitted_taus_s=tuple(omitted),
    )


def adev_nonoverlapping(series: CounterSeries, taus: Sequence[float]) -> AllanResult:
    """Non-overlapping (strided) Allan standard deviation over disjoint intervals."""
    y = series.readings
    out_t, out_s, out_n, omitted = [], [], [], []
    for tau in taus:
        m = _tau_multiple(tau, series.gate_s)
        n_blocks = y.size // m
        if n_blocks < 2:
            omitted.append(float(tau))
            continue
        blocks = y[: n_blocks * m].reshape(n_blocks, m).mean(axis=1)
        d = blocks[1:] - blocks[:-1]
        out_t.append(m * series.gate_s)
        out_s.append(float(np.sqrt(0.5 * np.mean(d * d))))
        out_n.append(d.size)
    return AllanResult(
        taus_s=np.array(out_t), sigmas=np.array(out_s), n_pairs=np.array(out_n),
        units=UNITS_HZ, estimator="non-overlapping", omitted_taus_s=tuple(omitted),
    )


def to_fractional(result: AllanResult, nominal_hz: int) -> AllanResult:
    """Convert an absolute-Hz result to fractional units (sigma / nu0)."""
    if nominal_hz <= 0:
        raise ParameterError("nominal_hz must be > 0")
    if result.units != UNITS_HZ:
        raise ParameterError("result is already fractional")
    return replace(result, sigmas=result.sigmas / float(nominal_hz), units=UNITS_FRACTIONAL)


def to_absolute(result: AllanResult, nominal_hz: int) -> AllanResult:
    """Convert a fractional result to absolute Hz (sigma * nu0)."""
    if nominal_hz <= 0:
        raise ParameterError("nominal_hz must be > 0")
    if result.units != UNITS_FRACTIONAL:
        raise ParameterError("result is already absolute")
    return replace(result, sigmas=result.sigmas * float(nominal_hz), units=UNITS_HZ)


def peak_to_peak(series: CounterSeries, window_s: Optional[float] = None) -> float:
    """Max minus min reading over the leading window (full series if omitted)."""
    if window_s is None:
        y = series.readings
    else:
        k = int(round(window_s / series.gate_s))
        if k < 1:
            raise ParameterError("window shorter than one gate")
        if window_s > series.span_s * (1.0 + 1e-9):
            raise ParameterError("window exceeds series span")
        y = series.readings[:k]
    return float(y.max() - y.min())


def octave_taus(gate_s: float, span_s: float) -> list:
    """Default tau grid: {1, 2, 4, ...} * gate up to span/4."""
    taus = []
    m = 1
    while m * gate_s <= span_s / 4.0:
        taus.append(m * gate_s)
        m *= 2
    return taus


def fit_noise_slope(result: AllanResult, tau_min: float, tau_max: float) -> SlopeFit:
    """Least-squares line through (log tau, log sigma) within [tau_min, tau_max]."""
    mask = (result.taus_s >= tau_min) & (result.taus_s <= tau_max) & (result.sigmas > 0.0)
    if np.count_nonzero(mask) < 3:
        raise ParameterError("slope fit needs at least 3 points in range")
    x = np.log(result.taus_s[mask])
    y = np.log(result.sigmas[mask])
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    residual = float(res[0]) if res.size else 0.0
    return SlopeFit(
        tau_range_s=(float(tau_min), float(tau_max)),
        slope=float(slope), intercept=float(intercept), residual=residual,
    )


def psd_estimate(trace: FrequencyTrace, segments: int) -> Tuple[np.ndarray, np.ndarray]:
    """Averaged-periodogram one-sided PSD of a trace.

    The trace is split into ``segments`` equal non-overlapping chunks
    (boxcar window, remainder discarded); per-segment periodograms are
    averaged.  Satisfies Parseval: sum(S) * df = mean square of the data.
    """
    if segments < 1:
        raise ParameterError("segments must be >= 1")
    n = trace.samples.size
    if n < 4 * segments:
        raise ParameterError("trace must be at least 4 samples per segment")
    seg_len = n // segments
    data = trace.samples[: segments * seg_len].reshape(segments, seg_len)
    spectra = np.fft.rfft(data, axis=1)
    psd = (2.0 * trace.dt_s / seg_len) * np.abs(spectra) ** 2
    psd[:, 0] /= 2.0
    if seg_len % 2 == 0:
        psd[:, -1] /= 2.0
    freqs = np.fft.rfftfreq(seg_len, trace.dt_s)
    return freqs, psd.mean(axis=0)
