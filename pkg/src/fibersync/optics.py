"""Transmit chain and fiber medium models.

Laser source, phase modulator carrying the 1PPS pattern, intensity modulator
carrying the RF tone, compensating delay line and the noisy link-delay
process.  The optical carrier (~193 THz) cannot live on any feasible sample
grid, so fields carry a sampled baseband envelope plus an exact scalar
carrier-phase offset that delays update analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, GridError, SaturationError, SignalError
from .signals import ComplexSignal, RealSignal, TimeGrid, fractional_delay, wrap_phase

__all__ = [
    "SPEED_OF_LIGHT",
    "OpticalField",
    "PpsWaveform",
    "RfTone",
    "LinkNoiseProcess",
    "OdlState",
    "SaturationEvent",
    "laser_field",
    "pps_phase_waveform",
    "phase_modulate",
    "intensity_modulate",
    "propagate_link",
    "odl_apply",
    "sample_link_delay",
]

SPEED_OF_LIGHT = 299792458.0  # m/s


def carrier_angular_frequency(wavelength_nm: float) -> float:
    """Optical carrier angular frequency [rad/s] for a vacuum wavelength."""
    return 2.0 * math.pi * SPEED_OF_LIGHT / (wavelength_nm * 1e-9)


@dataclass(frozen=True)
class OpticalField:
    """Optical carrier as baseband envelope plus exact carrier bookkeeping.

    ``carrier_phase_offset`` accumulates the analytic carrier phase picked up
    by delays (a delay of ``tau`` retards the carrier by ``omega_c * tau``);
    it is kept wrapped to (-pi, pi].  Direct detection ignores it, and only
    phase *differences* enter the interferometer, so a wrapped scalar is
    sufficient and exact.
    """

    envelope: ComplexSignal
    wavelength_nm: float
    carrier_phase_offset: float = 0.0

    def __post_init__(self):
        if self.wavelength_nm <= 0:
            raise ConfigError(f"wavelength must be positive, got {self.wavelength_nm}")

    @property
    def grid(self) -> TimeGrid:
        return self.envelope.grid

    @property
    def carrier_omega(self) -> float:
        return carrier_angular_frequency(self.wavelength_nm)

    def intensity(self) -> RealSignal:
        return self.envelope.intensity()


@dataclass(frozen=True)
class PpsWaveform:
    """Pulse-per-second pattern encoded as carrier phase steps.

    Each epoch raises the optical phase to ``phase_high`` for ``pulse_width``
    seconds.  Epochs must be strictly increasing and separated by more than
    twice the pulse width so adjacent interferometer responses cannot overlap.
    """

    epoch_times: tuple
    pulse_width: float
    phase_high: float = math.pi

    def __post_init__(self):
        epochs = tuple(float(e) for e in self.epoch_times)
        object.__setattr__(self, "epoch_times", epochs)
        if self.pulse_width <= 0:
            raise ConfigError("pulse_width must be positive")
        if any(b - a <= 0 for a, b in zip(epochs, epochs[1:])):
            raise ConfigError("epoch_times must be strictly increasing")
        if any(b - a <= 2.0 * self.pulse_width for a, b in zip(epochs, epochs[1:])):
            raise ConfigError("epochs closer than twice the pulse width")


@dataclass(frozen=True)
class RfTone:
    """Intensity-modulation drive: frequency, initial phase, depth in [0, 1]."""

    frequency: float
    phase: float = 0.0
    depth: float = 1.0

    def __post_init__(self):
        if self.frequency <= 0:
            raise ConfigError("RF frequency must be positive")
        if not 0.0 <= self.depth <= 1.0:
            raise ConfigError(f"modulation depth must be in [0, 1], got {self.depth}")

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.frequency

    @property
    def period(self) -> float:
        return 1.0 / self.frequency


def laser_field(grid: TimeGrid, power: float, phi0: float, wavelength_nm: float) -> OpticalField:
    """Continuous-wave source: constant envelope sqrt(power) * exp(i*phi0)."""
    if power <= 0:
        raise ConfigError(f"laser power must be positive, got {power}")
    amp = math.sqrt(power) * complex(math.cos(phi0), math.sin(phi0))
    env = ComplexSignal(grid, np.full(grid.n_samples, amp, dtype=np.complex128))
    return OpticalField(env, wavelength_nm)


def pps_phase_waveform(pps: PpsWaveform, grid: TimeGrid) -> RealSignal:
    """Rectangular phase pattern: ``phase_high`` during each pulse, 0 elsewhere.

    Transitions land on the nearest sample boundary (within one sample of the
    requested epoch).  Epochs outside the grid simply contribute nothing.
    """
    t0 = grid.start
    fs = grid.sample_rate
    n = grid.n_samples
    phi = np.zeros(n)
    width = int(math.ceil(pps.pulse_width * fs))
    for epoch in pps.epoch_times:
        i0 = int(math.ceil((epoch - t0) * fs - 1e-9))
        i1 = i0 + width
        if i1 <= 0 or i0 >= n:
            continue
        phi[max(i0, 0):min(i1, n)] = pps.phase_high
    return RealSignal(grid, phi)


def phase_modulate(fld: OpticalField, phi: RealSignal) -> OpticalField:
    """Multiply the envelope by exp(i*phi(t)); intensity is untouched.

    This is the idealised zero-residual-amplitude-modulation case.
    """
    if phi.grid != fld.grid:
        raise GridError("phase waveform grid does not match field grid")
    env = fld.envelope.samples * np.exp(1j * phi.samples)
    valid = fld.envelope.valid & phi.valid
    return replace(fld, envelope=ComplexSignal(fld.grid, env, valid=valid))


def intensity_modulate(fld: OpticalField, tone: RfTone) -> OpticalField:
    """Scale the intensity by 1 + depth * sin(omega*t + phase).

    The envelope picks up the square root of that factor so detected power
    reproduces the drive exactly.  The grid must oversample the tone (at
    least 4 samples per RF period) to leave headroom for the square root's
    harmonics.
    """
    if fld.grid.sample_rate <= 4.0 * tone.frequency:
        raise SignalError(
            f"sample rate {fld.grid.sample_rate:g} too low for {tone.frequency:g} Hz "
            "intensity modulation (need > 4x)"
        )
    t = fld.grid.times()
    factor = 1.0 + tone.depth * np.sin(tone.omega * t + tone.phase)
    env = fld.envelope.samples * np.sqrt(np.maximum(factor, 0.0))
    return replace(fld, envelope=ComplexSignal(fld.grid, env, valid=fld.envelope.valid))


def propagate_link(fld: OpticalField, t_link: float, half_width: int = 32) -> OpticalField:
    """Propagate through a fiber span with one-way delay ``t_link``.

    The envelope is delayed on the grid; the carrier picks up the analytic
    phase retardation ``-omega_c * t_link`` (tracked modulo 2*pi).  Any
    intensity-modulation tone consequently acquires an RF phase shift of
    ``omega_rf * t_link``.
    """
    if t_link < 0:
        raise SignalError(f"link delay must be >= 0, got {t_link}")
    env = fractional_delay(fld.envelope, t_link, half_width=half_width)
    offset = wrap_phase(fld.carrier_phase_offset - _carrier_phase(fld.carrier_omega, t_link))
    return replace(fld, envelope=env, carrier_phase_offset=offset)


def _carrier_phase(omega_c: float, tau: float) -> float:
    # math.fmod keeps the reduction exact at the float64 level for the huge
    # omega_c * tau products a long fiber produces
    return math.fmod(omega_c * tau, 2.0 * math.pi)


def odl_apply(fld: OpticalField, odl: "OdlState", half_width: int = 32) -> OpticalField:
    """Apply the compensating delay line: same contract as propagate_link.

    Unlike the fiber, the delay-line setting may be negative relative to its
    mid-range reference; negative total delay advances the envelope.
    """
    overflow = odl.overflow()
    if overflow:
        raise SaturationError(
            "delay line driven outside its range: "
            + ", ".join(f"{e.stage} over by {e.overflow_s:g} s" for e in overflow),
            events=overflow,
        )
    tau = odl.total_delay
    env = fractional_delay(fld.envelope, tau, half_width=half_width)
    offset = wrap_phase(fld.carrier_phase_offset - _carrier_phase(fld.carrier_omega, tau))
    return replace(fld, envelope=env, carrier_phase_offset=offset)


@dataclass(frozen=True)
class SaturationEvent:
    """One actuator-stage overflow: what was asked, what the stage can do."""

    stage: str
    requested_s: float
    limit_s: float
    overflow_s: float
    time_s: float | None = None

    def as_dict(self) -> dict:
        return {
            "stage": self.stage,
            "requested_s": self.requested_s,
            "limit_s": self.limit_s,
            "overflow_s": self.overflow_s,
            "time_s": self.time_s,
        }


@dataclass(frozen=True)
class OdlState:
    """Two-stage delay line setting: slow thermal spool + fast PZT stretcher."""

    thermal_delay: float = 0.0
    pzt_delay: float = 0.0
    thermal_range: float = 50e-9
    pzt_range: float = 20e-12

    @property
    def total_delay(self) -> float:
        return self.thermal_delay + self.pzt_delay

    def overflow(self) -> list[SaturationEvent]:
        events = []
        if abs(self.thermal_delay) > self.thermal_range:
            events.append(SaturationEvent(
                "thermal", self.thermal_delay, self.thermal_range,
                abs(self.thermal_delay) - self.thermal_range))
        if abs(self.pzt_delay) > self.pzt_range:
            events.append(SaturationEvent(
                "pzt", self.pzt_delay, self.pzt_range,
                abs(self.pzt_delay) - self.pzt_range))
        return events


@dataclass(frozen=True)
class LinkNoiseProcess:
    """Time-varying one-way propagation delay of the fiber link.

    Decomposes into a static delay (length * index / c), a slow sinusoidal
    thermal drift, a seeded random walk and band-limited white timing jitter.
    A realization is a pure function of (seed, resolution): the stochastic
    terms are precomputed on an internal grid at construction, so sampling is
    reproducible and thread-safe.
    """

    static_delay: float
    drift_amplitude: float = 0.0
    drift_period: float = 86400.0
    random_walk_coeff: float = 0.0  # s per sqrt(s)
    jitter_psd_level: float = 0.0   # s^2/Hz, one-sided, flat to 1/(2*resolution)
    rng_seed: int = 0
    horizon: float = 2000.0
    resolution: float = 1e-3
    _rw: np.ndarray = field(init=False, repr=False, compare=False)
    _jitter: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.static_delay <= 0:
            raise ConfigError("static_delay must be positive")
        if self.drift_amplitude < 0 or self.drift_period <= 0:
            raise ConfigError("invalid thermal drift parameters")
        if self.random_walk_coeff < 0 or self.jitter_psd_level < 0:
            raise ConfigError("noise coefficients must be >= 0")
        n = int(math.ceil(self.horizon / self.resolution)) + 2
        rng = np.random.default_rng(self.rng_seed)
        if self.random_walk_coeff > 0:
            steps = rng.standard_normal(n) * (self.random_walk_coeff * math.sqrt(self.resolution))
            rw = np.concatenate(([0.0], np.cumsum(steps)))
        else:
            rng.standard_normal(n)  # keep the stream position stable
            rw = np.zeros(n + 1)
        if self.jitter_psd_level > 0:
            sigma = math.sqrt(self.jitter_psd_level / (2.0 * self.resolution))
            jitter = rng.standard_normal(n + 1) * sigma
        else:
            jitter = np.zeros(n + 1)
        object.__setattr__(self, "_rw", rw)
        object.__setattr__(self, "_jitter", jitter)

    def delay_at(self, t):
        """One-way link delay [s] at time(s) ``t`` (scalar or array)."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0) or np.any(t_arr > self.horizon):
            raise SignalError(f"link delay requested outside [0, {self.horizon:g}] s horizon")
        out = self.static_delay + self.drift_amplitude * np.sin(
            2.0 * math.pi * t_arr / self.drift_period
        )
        if self.random_walk_coeff > 0:
            pos = t_arr / self.resolution
            i = np.floor(pos).astype(int)
            frac = pos - i
            out = out + (1.0 - frac) * self._rw[i] + frac * self._rw[i + 1]
        if self.jitter_psd_level > 0:
            idx = np.round(t_arr / self.resolution).astype(int)
            out = out + self._jitter[idx]
        if out.ndim == 0:
            return float(out)
        return out


def sample_link_delay(process: LinkNoiseProcess, t):
    """Functional alias for :meth:`LinkNoiseProcess.delay_at`."""
    return process.delay_at(t)
