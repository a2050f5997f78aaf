"""Receive chain: photodetectors, delay interferometer, pulse and RF recovery.

Direct detection converts envelope intensity to an electrical signal inside a
detector band.  The unbalanced interferometer turns carrier phase steps into
intensity bursts.  A threshold stage regenerates pulse events, and an I/Q
correlator acts as the RF phase discriminator.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import ConfigError, SignalError
from .optics import OpticalField
from .signals import ComplexSignal, RealSignal, filter_lowpass, fractional_delay, wrap_phase

__all__ = [
    "DetectorSpec",
    "MziSpec",
    "PulseEvent",
    "PhaseReading",
    "default_rf_detector",
    "default_pulse_detector",
    "direct_detect",
    "mzi_interfere",
    "regenerate_pps",
    "phase_discriminate",
    "tone_phasor",
    "tone_phase",
    "tone_amplitude",
]


@dataclass(frozen=True)
class DetectorSpec:
    """Photodetector model: responsivity, pass band and additive noise floor.

    ``band_low == 0`` means DC-coupled.  ``noise_density`` is an output
    voltage density [V/rtHz]; draws are seeded from (seed, signal content) so
    results do not depend on evaluation order.
    """

    band_high: float
    band_low: float = 0.0
    responsivity: float = 1.0
    noise_density: float = 0.0
    seed: int = 0
    filter_order: int = 4

    def __post_init__(self):
        if not 0.0 <= self.band_low < self.band_high:
            raise ConfigError(
                f"detector band invalid: [{self.band_low:g}, {self.band_high:g}]"
            )
        if self.noise_density < 0:
            raise ConfigError("noise density must be >= 0")


def default_rf_detector(**overrides) -> DetectorSpec:
    """High-bandwidth AC-coupled detector for RF tone recovery (30 kHz - 1 GHz)."""
    kw = dict(band_low=30e3, band_high=1e9)
    kw.update(overrides)
    return DetectorSpec(**kw)


def default_pulse_detector(**overrides) -> DetectorSpec:
    """Low-bandwidth DC-coupled detector for pulse recovery (DC - 125 MHz)."""
    kw = dict(band_low=0.0, band_high=125e6)
    kw.update(overrides)
    return DetectorSpec(**kw)


@dataclass(frozen=True)
class MziSpec:
    """Unbalanced two-arm delay interferometer.

    ``path_difference`` is the inter-arm delay.  ``bias_lock='ideal_destructive'``
    models a perfectly servoed interferometer (effective inter-arm carrier
    phase pi, so continuous light interferes destructively);
    ``'fixed_value'`` uses ``bias`` as-is to study bias error.
    """

    path_difference: float
    bias: float = math.pi
    bias_lock: str = "ideal_destructive"

    def __post_init__(self):
        if self.path_difference <= 0:
            raise ConfigError("path_difference must be positive")
        if self.bias_lock not in ("ideal_destructive", "fixed_value"):
            raise ConfigError(f"unknown bias_lock {self.bias_lock!r}")

    @property
    def effective_bias(self) -> float:
        return math.pi if self.bias_lock == "ideal_destructive" else self.bias


@dataclass(frozen=True)
class PulseEvent:
    """One regenerated pulse: threshold-crossing epoch and shape summary."""

    timestamp: float
    peak_amplitude: float
    width: float
    degraded: bool = False


@dataclass(frozen=True)
class PhaseReading:
    """Discriminator output with dead-zone and confidence annotations."""

    phase: float
    in_dead_zone: bool = False
    low_confidence: bool = False


def _signal_rng(seed: int, samples: np.ndarray) -> np.random.Generator:
    fingerprint = zlib.crc32(np.ascontiguousarray(samples).tobytes())
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(fingerprint,)))


def _apply_band(sig: RealSignal, det: DetectorSpec) -> RealSignal:
    fs = sig.grid.sample_rate
    out = sig
    if det.band_high < sig.grid.nyquist:
        out = filter_lowpass(out, det.band_high, order=det.filter_order)
    if det.band_low > 0.0:
        if det.band_low * sig.grid.span < 0.25:
            # window far shorter than the coupling time constant: AC coupling
            # reduces to removing the window mean
            mean = float(np.mean(out.samples[out.valid])) if out.n_valid else 0.0
            out = RealSignal(out.grid, out.samples - mean, valid=out.valid)
        else:
            sos = sps.butter(det.filter_order, det.band_low, btype="high", fs=fs, output="sos")
            out = RealSignal(out.grid, sps.sosfiltfilt(sos, out.samples), valid=out.valid)
    return out


def _add_noise(sig: RealSignal, det: DetectorSpec) -> RealSignal:
    if det.noise_density <= 0:
        return sig
    bw = det.band_high - det.band_low
    rng = _signal_rng(det.seed, sig.samples)
    noise = rng.standard_normal(len(sig.samples)) * (det.noise_density * math.sqrt(bw))
    return RealSignal(sig.grid, sig.samples + noise, valid=sig.valid)


def direct_detect(fld: OpticalField, det: DetectorSpec) -> RealSignal:
    """Photodetect |envelope|^2 through the detector band.

    Output is insensitive to the field's carrier phase offset.  A purely
    phase-modulated field therefore detects as flat (zero after AC coupling).
    """
    if det.band_high > fld.grid.nyquist:
        raise SignalError(
            f"grid Nyquist {fld.grid.nyquist:g} Hz below detector band "
            f"high {det.band_high:g} Hz"
        )
    photo = RealSignal(
        fld.grid, det.responsivity * np.abs(fld.envelope.samples) ** 2,
        valid=fld.envelope.valid,
    )
    return _add_noise(_apply_band(photo, det), det)


def mzi_interfere(fld: OpticalField, mzi: MziSpec) -> RealSignal:
    """Recombine the field with a ``path_difference``-advanced copy of itself.

    Output intensity is |E(t) + E(t + tau) * exp(i*bias)|^2 / 4 computed from
    the sampled envelope; the inter-arm carrier phase enters through
    ``effective_bias``.  When the path difference is an integer number of
    samples the advance is exact; otherwise band-limited interpolation is
    used.  Edge samples that depend on data beyond the grid are invalid.
    """
    tau = mzi.path_difference
    if fld.grid.span <= 3.0 * tau:
        raise SignalError(
            f"grid span {fld.grid.span:g} s too short for path difference {tau:g} s "
            "(need > 3x)"
        )
    advanced = fractional_delay(fld.envelope, -tau)
    rot = complex(math.cos(mzi.effective_bias), math.sin(mzi.effective_bias))
    combined = fld.envelope.samples + advanced.samples * rot
    out = 0.25 * np.abs(combined) ** 2
    valid = fld.envelope.valid & advanced.valid
    return RealSignal(fld.grid, out, valid=valid)


def regenerate_pps(
    intensity: RealSignal,
    det: DetectorSpec,
    threshold: float = 0.5,
    group_window: float | None = None,
    min_contrast: float = 0.25,
) -> list[PulseEvent]:
    """Detect pulse bursts in an interferometer intensity trace.

    The trace is passed through the detector band, then rising crossings of
    ``background + threshold * (peak - background)`` are grouped into events
    (crossings closer than ``group_window`` belong to one pulse; default ten
    response times of the detector).  The threshold is referenced to the
    background level so a residual RF pedestal does not fire the detector.
    Event timestamps are the first crossing of each group, linearly
    interpolated between samples.

    Returns an empty list when the trace has no contrast (continuous-wave
    input).  Events overlapping invalid samples are flagged degraded.
    """
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must be in (0, 1), got {threshold}")
    if group_window is None:
        group_window = 10.0 / det.band_high
    filtered = _add_noise(_apply_band(
        RealSignal(intensity.grid, det.responsivity * intensity.samples,
                   valid=intensity.valid), det), det)

    v = filtered.samples
    m = filtered.valid
    if not m.any():
        return []
    peak = float(np.max(v[m]))
    background = float(np.median(v[m]))
    contrast = peak - background
    scale = max(abs(peak), abs(background), 1e-300)
    if contrast <= min_contrast * scale:
        return []

    thr = background + threshold * contrast
    t = filtered.grid.times()
    dt = filtered.grid.dt
    above = (v >= thr) & m
    rises = np.flatnonzero(~above[:-1] & above[1:]) + 1
    falls = np.flatnonzero(above[:-1] & ~above[1:]) + 1
    if len(rises) == 0:
        return []

    events: list[PulseEvent] = []
    group: list[int] = []
    for idx in rises:
        if group and (t[idx] - t[group[-1]]) > group_window:
            events.append(_make_event(group, falls, v, m, t, dt, thr, peak))
            group = []
        group.append(int(idx))
    events.append(_make_event(group, falls, v, m, t, dt, thr, peak))
    return events


def _cross_time(i: int, v, t, dt, thr) -> float:
    """Linear-interpolated instant at which v crosses thr between i-1 and i."""
    y0, y1 = v[i - 1], v[i]
    frac = (thr - y0) / (y1 - y0) if y1 != y0 else 0.0
    return float(t[i - 1] + frac * dt)


def _make_event(group, falls, v, m, t, dt, thr, peak) -> PulseEvent:
    first = group[0]
    timestamp = _cross_time(first, v, t, dt, thr)
    after = falls[falls > group[-1]]
    if len(after):
        fall = int(after[0])
        t_end = _cross_time(fall, v, t, dt, thr)
        hi = fall + 1
    else:
        t_end = float(t[-1])
        hi = len(v)
    window = slice(max(first - 1, 0), hi)
    return PulseEvent(
        timestamp=timestamp,
        peak_amplitude=float(np.max(v[window]) / peak),
        width=max(t_end - timestamp, 0.0),
        degraded=bool(np.any(~m[window])),
    )


def tone_phasor(sig: RealSignal, freq: float) -> complex:
    """Complex amplitude C such that sig(t) ~ Im(C * exp(i*omega*t)).

    Correlates over the largest run of valid samples trimmed to an integer
    number of tone cycles, which makes the estimate leakage-free whenever the
    sample rate is a multiple of the tone frequency.
    """
    if freq <= 0:
        raise SignalError("tone frequency must be positive")
    sl = sig.valid_slice()
    n_avail = sl.stop - sl.start
    fs = sig.grid.sample_rate
    if n_avail < 2 or n_avail * freq / fs < 1.0:
        raise SignalError("fewer than one tone cycle of valid samples")
    n_cyc = math.floor(n_avail * freq / fs)
    n_used = int(round(n_cyc * fs / freq))
    while n_used > n_avail:
        n_cyc -= 1
        n_used = int(round(n_cyc * fs / freq))
    seg = slice(sl.start, sl.start + n_used)
    t = sig.grid.times()[seg]
    z = 2.0 / n_used * np.sum(sig.samples[seg] * np.exp(-1j * 2.0 * math.pi * freq * t))
    # sig = A*sin(wt+phi) = Im(A e^{i(wt+phi)}) correlates to A e^{i(phi - pi/2)}
    return complex(z * 1j)


def tone_phase(sig: RealSignal, freq: float) -> float:
    """Phase [rad] of the sine component at ``freq``: sig ~ A sin(w t + phase)."""
    return float(np.angle(tone_phasor(sig, freq)))


def tone_amplitude(sig: RealSignal, freq: float) -> float:
    return float(abs(tone_phasor(sig, freq)))


def estimate_tone_frequency(sig: RealSignal) -> float:
    """Dominant non-DC frequency of the valid interior, from the FFT peak."""
    sl = sig.valid_slice()
    x = sig.samples[sl]
    if len(x) < 8:
        raise SignalError("too few valid samples to estimate a tone frequency")
    spec = np.abs(np.fft.rfft(x - np.mean(x)))
    spec[0] = 0.0
    k = int(np.argmax(spec))
    if spec[k] == 0.0:
        raise SignalError("no tone found")
    return k * sig.grid.sample_rate / len(x)


def phase_discriminate(
    a: RealSignal,
    b: RealSignal,
    dead_zone: float = 0.0,
    freq: float | None = None,
) -> PhaseReading:
    """Wrapped phase difference of the fundamental tones of ``a`` and ``b``.

    Positive result means ``b`` lags ``a`` (a pure delay of ``b`` by ``d``
    reads ``omega * d``).  Results inside the dead zone are reported as 0
    with the flag set, mirroring a hardware discriminator's blind region.
    ``freq`` may be omitted, in which case it is estimated from ``a``.
    """
    if dead_zone < 0:
        raise ConfigError("dead_zone must be >= 0")
    if freq is None:
        freq = estimate_tone_frequency(a)
    ca = tone_phasor(a, freq)
    cb = tone_phasor(b, freq)
    low_conf = False
    for sig, c in ((a, ca), (b, cb)):
        sl = sig.valid_slice()
        seg = sig.samples[sl]
        resid = seg - np.imag(c * np.exp(1j * 2 * math.pi * freq * sig.grid.times()[sl]))
        rms = math.sqrt(float(np.mean(resid**2)))
        if abs(c) < 3.0 * rms:
            low_conf = True
    delta = wrap_phase(float(np.angle(ca) - np.angle(cb)))
    if dead_zone > 0.0 and abs(delta) < dead_zone:
        return PhaseReading(0.0, in_dead_zone=True, low_confidence=low_conf)
    return PhaseReading(delta, low_confidence=low_conf)
