"""Seeded synthesis of oscillator frequency-noise traces.

Signals are instantaneous frequency offsets (Hz) from an exact integer
carrier.  Stochastic content is described by a one-sided power-law PSD

    S_nu(f) = sum_alpha h_alpha * f**alpha,   alpha in {-2, -1, 0, +1, +2}

in Hz^2/Hz, optionally augmented by a deterministic linear drift.  Carriers
never pass through floating point: at 2e14 Hz a double has ~0.04 Hz
granularity, so offsets are stored separately from the integer carrier.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sp_fft
from scipy.optimize import nnls

from .errors import ParameterError

#: Spectral exponents supported by :class:`NoiseSpec`.
POWER_LAW_EXPONENTS = (-2, -1, 0, 1, 2)

_LN2 = float(np.log(2.0))
_MAX_CARRIER = 2**63


def derive_seed(seed: int, label: str) -> int:
    """Derive a child seed from a root seed and a role label.

    Stable across processes and platforms (BLAKE2s of ``"seed:label"``),
    so scenario re-runs regenerate bit-identical traces.
    """
    digest = hashlib.blake2s(f"{seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


@dataclass(frozen=True)
class NoiseSpec:
    """Power-law frequency-noise recipe.

    Parameters
    ----------
    h_coeffs : mapping
        Exponent alpha -> coefficient h_alpha of the one-sided PSD
        ``S_nu(f) = sum h_alpha f**alpha`` (Hz^2/Hz).
    drift_rate : float
        Deterministic linear drift, Hz/s.
    drift_random_walk : float
        Random-walk FM intensity; acts as an additional contribution to
        h_{-2}, kept separate as a calibration knob.
    """

    h_coeffs: Mapping[int, float] = field(default_factory=dict)
    drift_rate: float = 0.0
    drift_random_walk: float = 0.0

    def __post_init__(self):
        coeffs = {}
        for alpha, h in dict(self.h_coeffs).items():
            alpha = int(alpha)
            if alpha not in POWER_LAW_EXPONENTS:
                raise ParameterError(f"unsupported PSD exponent {alpha}")
            h = float(h)
            if h < 0.0:
                raise ParameterError(f"h_{alpha} must be >= 0, got {h}")
            if h != 0.0:
                coeffs[alpha] = h
        if self.drift_random_walk < 0.0:
            raise ParameterError("drift_random_walk must be >= 0")
        object.__setattr__(self, "h_coeffs", coeffs)

    @property
    def is_zero(self) -> bool:
        """True for the ideal oscillator (no stochastic or drift content)."""
        return not self.h_coeffs and self.drift_rate == 0.0 and self.drift_random_walk == 0.0

    @property
    def has_stochastic(self) -> bool:
        return bool(self.h_coeffs) or self.drift_random_walk > 0.0

    def effective_h(self) -> dict:
        """h_coeffs with the random-walk knob folded into h_{-2}."""
        h = dict(self.h_coeffs)
        if self.drift_random_walk > 0.0:
            h[-2] = h.get(-2, 0.0) + self.drift_random_walk
        return h

    def psd(self, freqs: np.ndarray) -> np.ndarray:
        """One-sided PSD evaluated on ``freqs`` (the f=0 bin is forced to 0)."""
        freqs = np.asarray(freqs, dtype=float)
        out = np.zeros_like(freqs)
        pos = freqs > 0.0
        for alpha, h in self.effective_h().items():
            out[pos] += h * freqs[pos] ** alpha
        return out

    def scaled(self, factor: float) -> "NoiseSpec":
        """PSD scaled by ``factor**2`` (drift rate scales by ``factor``)."""
        return NoiseSpec(
            h_coeffs={a: h * factor**2 for a, h in self.h_coeffs.items()},
            drift_rate=self.drift_rate * factor,
            drift_random_walk=self.drift_random_walk * factor**2,
        )


def _validate_profile(profile) -> Tuple[Tuple[float, float], ...]:
    pts = tuple((float(t), float(s)) for t, s in profile)
    if len(pts) < 2:
        raise ParameterError("adev_profile needs at least 2 points")
    taus = [t for t, _ in pts]
    if any(t2 <= t1 for t1, t2 in zip(taus, taus[1:])):
        raise ParameterError("adev_profile taus must be strictly increasing")
    if any(s <= 0.0 for _, s in pts):
        raise ParameterError("adev_profile sigmas must be > 0")
    return pts


@dataclass(frozen=True)
class OscillatorModel:
    """A noise recipe bound to an exact integer carrier.

    ``adev_profile`` is an optional list of (tau_s, sigma_y) pairs in
    *fractional* units; when present it overrides ``noise`` for trace
    synthesis (used for the GPS comb and iodine-stabilized references).
    """

    nominal_hz: int
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    adev_profile: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        if not isinstance(self.nominal_hz, (int, np.integer)) or isinstance(self.nominal_hz, bool):
            raise ParameterError("nominal_hz must be an exact integer")
        if self.nominal_hz <= 0:
            raise ParameterError("nominal_hz must be > 0")
        object.__setattr__(self, "nominal_hz", int(self.nominal_hz))
        if self.adev_profile is not None:
            object.__setattr__(self, "adev_profile", _validate_profile(self.adev_profile))


@dataclass(frozen=True)
class CombModel:
    """Optical frequency comb: lines at ``f_ceo + n * f_rep``.

    ``reference_noise`` / ``adev_profile`` describe common-mode *fractional*
    noise applied to every line.
    """

    f_rep_hz: int
    f_ceo_hz: int = 0
    reference_noise: Optional[NoiseSpec] = None
    adev_profile: Optional[Tuple[Tuple[float, float], ...]] = None

    def __post_init__(self):
        for name in ("f_rep_hz", "f_ceo_hz"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ParameterError(f"{name} must be an exact integer")
            object.__setattr__(self, name, int(v))
        if self.f_rep_hz <= 0:
            raise ParameterError("f_rep_hz must be > 0")
        if not 0 <= self.f_ceo_hz < self.f_rep_hz:
            raise ParameterError("f_ceo_hz must satisfy 0 <= f_ceo < f_rep")
        if self.adev_profile is not None:
            object.__setattr__(self, "adev_profile", _validate_profile(self.adev_profile))

    def line_hz(self, n: int) -> int:
        return self.f_ceo_hz + int(n) * self.f_rep_hz


@dataclass(frozen=True)
class FrequencyTrace:
    """Uniformly sampled frequency offsets (Hz) from an integer carrier."""

    nominal_hz: int
    dt_s: float
    samples: np.ndarray
    seed: int = 0

    def __post_init__(self):
        if self.dt_s <= 0.0:
            raise ParameterError("dt must be > 0")
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise ParameterError("samples must be a nonempty 1-d sequence")
        object.__setattr__(self, "nominal_hz", int(self.nominal_hz))
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    def times(self) -> np.ndarray:
        return self.dt_s * np.arange(self.samples.size)

    @property
    def duration_s(self) -> float:
        return self.dt_s * self.samples.size


def write_trace_csv(trace: FrequencyTrace, path) -> None:
    """Write a trace in the canonical CSV format.

    Header: ``# nominal_hz=<int> dt=<float> seed=<uint64>`` followed by one
    offset per line with full round-trip precision.
    """
    with open(path, "w") as fh:
        fh.write(f"# nominal_hz={trace.nominal_hz} dt={trace.dt_s:.17g} seed={trace.seed}\n")
        fh.writelines(f"{v:.17g}\n" for v in trace.samples)


_TRACE_HEADER = re.compile(r"#\s*nominal_hz=(-?\d+)\s+dt=(\S+)\s+seed=(\d+)")


def read_trace_csv(path) -> FrequencyTrace:
    with open(path) as fh:
        header = fh.readline()
        m = _TRACE_HEADER.match(header)
        if not m:
            raise ParameterError(f"{path}: not a FrequencyTrace CSV")
        samples = np.loadtxt(fh, dtype=float, ndmin=1)
    return FrequencyTrace(
        nominal_hz=int(m.group(1)), dt_s=float(m.group(2)), samples=samples, seed=int(m.group(3))
    )


def synth_power_law(spec: NoiseSpec, duration_s: float, dt_s: float, seed: int) -> FrequencyTrace:
    """Synthesize a frequency-noise trace with the PSD prescribed by ``spec``.

    Frequency-domain shaping: a white Gaussian spectrum is multiplied by
    sqrt(S_nu(f)) with the DC bin zeroed, then inverse-FFT'd.  The working
    length is twice the output length to suppress circular correlation in
    the low-frequency (random-walk) components.  Deterministic per
    (spec, duration, dt, seed).
    """
    if dt_s <= 0.0:
        raise ParameterError("dt must be > 0")
    if duration_s < 2.0 * dt_s:
        raise ParameterError("duration must be at least 2*dt")
    n = int(round(duration_s / dt_s))
    samples = np.zeros(n)
    if spec.has_stochastic:
        m = sp_fft.next_fast_len(2 * n, real=True)
        rng = np.random.default_rng(seed)
        freqs = np.fft.rfftfreq(m, dt_s)
        # E|X_k|^2 = m * S(f_k) / (2 dt) gives a periodogram matching S.
        amp = np.sqrt(spec.psd(freqs) * (m / (2.0 * dt_s)))
        re = rng.standard_normal(amp.size)
        im = rng.standard_normal(amp.size)
        spectrum = amp * (re + 1j * im) / np.sqrt(2.0)
        spectrum[0] = 0.0
        if m % 2 == 0:
            spectrum[-1] = amp[-1] * re[-1]
        samples = sp_fft.irfft(spectrum, n=m)[:n].copy()
    if spec.drift_rate != 0.0:
        samples += spec.drift_rate * dt_s * np.arange(n)
    return FrequencyTrace(nominal_hz=0, dt_s=dt_s, samples=samples, seed=int(seed))


def laser_from_linewidth(
    nominal_hz: int,
    fwhm_linewidth_hz: float,
    drift_rate: float = 0.0,
    random_walk: float = 0.0,
) -> OscillatorModel:
    """Build a laser model from its Lorentzian FWHM linewidth.

    Uses the white-FM relation ``FWHM = pi * h0``; flicker/random-walk
    content is attached through the explicit drift arguments.
    """
    if fwhm_linewidth_hz <= 0.0:
        raise ParameterError("fwhm_linewidth_hz must be > 0")
    spec = NoiseSpec(
        h_coeffs={0: fwhm_linewidth_hz / np.pi},
        drift_rate=drift_rate,
        drift_random_walk=random_walk,
    )
    return OscillatorModel(nominal_hz=nominal_hz, noise=spec)


def comb_line_oscillator(comb: CombModel, n: int) -> OscillatorModel:
    """Oscillator model of comb line ``n`` (exact integer carrier).

    The comb's common-mode fractional noise is rescaled to absolute Hz at
    the line frequency; a fractional ADEV profile passes through unchanged.
    """
    if n < 1:
        raise ParameterError("comb line index must be >= 1")
    nu = comb.line_hz(n)
    if nu >= _MAX_CARRIER:
        raise ParameterError(f"comb line {n} overflows the integer carrier range")
    noise = NoiseSpec()
    if comb.reference_noise is not None:
        noise = comb.reference_noise.scaled(float(nu))
    return OscillatorModel(nominal_hz=nu, noise=noise, adev_profile=comb.adev_profile)


def decompose_adev_profile(profile) -> Tuple[float, float, float]:
    """Fit sigma^2(tau) = A/tau + B + C*tau to an ADEV profile.

    (A, B, C) >= 0 are the white-FM, flicker-FM and random-walk-FM Allan
    variance coefficients.  Two-point profiles are resolved exactly,
    preferring a white-FM component at the shortest tau (so extrapolation
    toward shorter averaging times behaves as white FM); longer profiles
    use nonnegative least squares on the {tau^-1, 1, tau} basis.
    """
    pts = _validate_profile(profile)
    taus = np.array([t for t, _ in pts])
    var = np.array([s * s for _, s in pts])
    if len(pts) == 2:
        for cols in ((0, 2), (0, 1), (1, 2)):  # white+RW, white+flicker, flicker+RW
            basis = np.column_stack([1.0 / taus, np.ones_like(taus), taus])[:, cols]
            try:
                sol = np.linalg.solve(basis, var)
            except np.linalg.LinAlgError:
                continue
            if np.all(sol >= 0.0):
                full = [0.0, 0.0, 0.0]
                for c, v in zip(cols, sol):
                    full[c] = float(v)
                return tuple(full)
    basis = np.column_stack([1.0 / taus, np.ones_like(taus), taus])
    sol, _ = nnls(basis, var)
    return float(sol[0]), float(sol[1]), float(sol[2])


def noise_spec_from_profile(profile, nominal_hz: int) -> NoiseSpec:
    """Convert a fractional ADEV profile to an absolute-Hz NoiseSpec."""
    a, b, c = decompose_adev_profile(profile)
    nu2 = float(nominal_hz) ** 2
    h = {}
    if a > 0.0:
        h[0] = 2.0 * a * nu2  # sigma^2 = h0 / (2 tau)
    if b > 0.0:
        h[-1] = b * nu2 / (2.0 * _LN2)  # sigma^2 = 2 ln2 h_{-1}
    if c > 0.0:
        h[-2] = 3.0 * c * nu2 / (2.0 * np.pi**2)  # sigma^2 = (2 pi^2 / 3) h_{-2} tau
    return NoiseSpec(h_coeffs=h)


def trace_from_adev_profile(
    model: OscillatorModel, duration_s: float, dt_s: float, seed: int
) -> FrequencyTrace:
    """Synthesize a trace whose overlapping ADEV matches the model's profile.

    The fractional profile is decomposed into white/flicker/random-walk FM
    components (see :func:`decompose_adev_profile`) and synthesized at the
    model's carrier.
    """
    if model.adev_profile is None:
        raise ParameterError("model has no adev_profile")
    spec = noise_spec_from_profile(model.adev_profile, model.nominal_hz)
    trace = synth_power_law(spec, duration_s, dt_s, seed)
    return replace(trace, nominal_hz=model.nominal_hz)


def oscillator_trace(
    model: OscillatorModel, duration_s: float, dt_s: float, seed: int
) -> FrequencyTrace:
    """Synthesize the model's free-running offsets (profile-driven if present)."""
    if model.adev_profile is not None:
        return trace_from_adev_profile(model, duration_s, dt_s, seed)
    trace = synth_power_law(model.noise, duration_s, dt_s, seed)
    return replace(trace, nominal_hz=model.nominal_hz)
