"""Signal generation and frequency-domain preprocessing.

Covers the stepped sine-sweep excitation, forward/inverse transforms,
windowing, magnitude-domain spectral subtraction and the approximate
room-impulse-response (RIR) estimate obtained by dividing the recording's
magnitude spectrum by the reference sweep's magnitude spectrum while
keeping the recording's phase.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

# Noise estimation window used by spectral subtraction: the slice of
# NOISE_LEN samples ending NOISE_GAP samples before the sweep onset.
NOISE_GAP = 200
NOISE_LEN = 1024


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


class WindowKind(enum.Enum):
    RECTANGULAR = "rectangular"
    HANN = "hann"


def window_weights(n: int, kind: WindowKind) -> np.ndarray:
    """Window weights of length n; Hann is 0.5*(1 - cos(2*pi*i/(n-1)))."""
    if n < 1:
        raise ConfigError("window length must be >= 1")
    if kind is WindowKind.RECTANGULAR:
        return np.ones(n)
    if n == 1:
        return np.ones(1)
    i = np.arange(n)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * i / (n - 1)))


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled real-valued time series."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.sample_rate_hz <= 0:
            raise ConfigError("sample_rate_hz must be positive")
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ConfigError("samples must be a non-empty 1-D sequence")

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class Spectrum:
    """Per-bin magnitude + phase of one transformed frame."""

    magnitudes: np.ndarray
    phases: np.ndarray
    frame_len: int

    def __post_init__(self):
        object.__setattr__(self, "magnitudes", np.asarray(self.magnitudes, dtype=float))
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=float))
        if not _is_power_of_two(self.frame_len):
            raise ConfigError("frame_len must be a power of two")
        if self.magnitudes.shape != (self.frame_len,) or self.phases.shape != (self.frame_len,):
            raise ConfigError("magnitudes/phases must both have frame_len entries")
        if np.any(self.magnitudes < 0):
            raise ConfigError("magnitudes must be non-negative")

    def to_complex(self) -> np.ndarray:
        return self.magnitudes * np.exp(1j * self.phases)


@dataclass(frozen=True)
class SweepConfig:
    """Layout of the stepped sweep inside one recording frame."""

    f0_hz: float = 500.0
    f1_hz: float = 4500.0
    f_step_hz: float = 50.0
    start_sample: int = 2048
    end_sample: int = 3072
    frame_len: int = 4096
    sample_rate_hz: float = 10_000.0

    def __post_init__(self):
        if not (0 < self.f0_hz <= self.f1_hz):
            raise ConfigError("need 0 < f0_hz <= f1_hz")
        if self.f1_hz > self.sample_rate_hz / 2:
            raise ConfigError("f1_hz exceeds the Nyquist frequency")
        if self.f_step_hz <= 0:
            raise ConfigError("f_step_hz must be positive")
        if not (0 <= self.start_sample < self.end_sample <= self.frame_len):
            raise ConfigError("need 0 <= start_sample < end_sample <= frame_len")
        if not _is_power_of_two(self.frame_len):
            raise ConfigError("frame_len must be a power of two")

    def step_frequencies(self) -> np.ndarray:
        """Held frequencies, uniformly increasing from f0 to f1."""
        if self.f1_hz == self.f0_hz:
            return np.array([self.f0_hz])
        n_whole = int(math.floor((self.f1_hz - self.f0_hz) / self.f_step_hz + 1e-9))
        freqs = self.f0_hz + self.f_step_hz * np.arange(n_whole + 1)
        if freqs[-1] < self.f1_hz - 1e-9:
            freqs = np.append(freqs, self.f1_hz)
        return freqs


def generate_stepped_sweep(cfg: SweepConfig) -> SampledSignal:
    """Phase-continuous stepped sine sweep embedded in a zero frame.

    Each frequency is held for an equal number of samples (remainder
    appended to the final step); phase accumulates continuously across
    step boundaries so there are no clicks.
    """
    freqs = cfg.step_frequencies()
    sweep_len = cfg.end_sample - cfg.start_sample
    hold = sweep_len // len(freqs)
    if hold == 0:
        raise ConfigError(
            f"sweep of {sweep_len} samples cannot hold {len(freqs)} frequency steps"
        )
    counts = np.full(len(freqs), hold, dtype=int)
    counts[-1] += sweep_len - hold * len(freqs)

    per_sample_freq = np.repeat(freqs, counts)
    inc = 2.0 * np.pi * per_sample_freq / cfg.sample_rate_hz
    phase = np.concatenate(([0.0], np.cumsum(inc)[:-1]))

    out = np.zeros(cfg.frame_len)
    out[cfg.start_sample:cfg.end_sample] = np.sin(phase)
    return SampledSignal(out, cfg.sample_rate_hz)


def forward_transform(signal: SampledSignal) -> Spectrum:
    """DFT of a power-of-two frame, as per-bin magnitude and phase."""
    n = len(signal)
    if not _is_power_of_two(n):
        raise ConfigError(f"frame length {n} is not a power of two")
    coeffs = np.fft.fft(signal.samples)
    return Spectrum(np.abs(coeffs), np.arctan2(coeffs.imag, coeffs.real), n)


def inverse_transform(spec: Spectrum, sample_rate_hz: float = 1.0,
                      imag_tol: float = 1e-6) -> SampledSignal:
    """Inverse DFT back to a real frame.

    The imaginary residue is asserted below ``imag_tol`` (spectra produced
    by this module are conjugate-symmetric, so the residue is numerical
    noise) and then discarded.
    """
    frame = np.fft.ifft(spec.to_complex())
    residue = np.max(np.abs(frame.imag))
    if residue >= imag_tol:
        raise ConfigError(
            f"inverse transform produced imaginary residue {residue:.3g} >= {imag_tol:.3g}; "
            "spectrum is not conjugate-symmetric"
        )
    return SampledSignal(frame.real, sample_rate_hz)


def apply_window(frame: np.ndarray, kind: WindowKind) -> np.ndarray:
    """Element-wise product of a frame with the window weights."""
    frame = np.asarray(frame, dtype=float)
    return frame * window_weights(frame.size, kind)


def spectral_subtract(recording: SampledSignal, cfg: SweepConfig, alpha: float = 1.0,
                      window: WindowKind = WindowKind.HANN,
                      noise_magnitudes: np.ndarray | None = None) -> SampledSignal:
    """Magnitude-domain noise subtraction with the recording's phase kept.

    The noise magnitude spectrum is estimated from the NOISE_LEN-sample
    slice ending NOISE_GAP samples before the sweep onset (a region where
    only background noise is present), windowed and zero-padded to the
    frame length before transforming. Per bin the output magnitude is
    max(0, |c_y| - alpha*|c_n|). ``noise_magnitudes`` overrides the
    estimate, mainly for testing.
    """
    if alpha < 0:
        raise ConfigError("alpha must be non-negative")
    if len(recording) != cfg.frame_len:
        raise ConfigError(
            f"recording length {len(recording)} != configured frame_len {cfg.frame_len}"
        )

    y_w = apply_window(recording.samples, window)
    spec_y = forward_transform(SampledSignal(y_w, recording.sample_rate_hz))

    if noise_magnitudes is None:
        n_end = cfg.start_sample - NOISE_GAP
        n_start = n_end - NOISE_LEN
        if n_start < 0:
            raise ConfigError(
                f"noise window [{n_start}, {n_end}) falls outside the frame"
            )
        noise = recording.samples[n_start:n_end]
        padded = np.zeros(cfg.frame_len)
        padded[:NOISE_LEN] = apply_window(noise, window)
        noise_magnitudes = forward_transform(
            SampledSignal(padded, recording.sample_rate_hz)).magnitudes
    else:
        noise_magnitudes = np.asarray(noise_magnitudes, dtype=float)
        if noise_magnitudes.shape != (cfg.frame_len,):
            raise ConfigError("noise_magnitudes must have frame_len entries")

    right_mag = np.maximum(0.0, spec_y.magnitudes - alpha * noise_magnitudes)
    cleaned = Spectrum(right_mag, spec_y.phases, cfg.frame_len)
    return inverse_transform(cleaned, recording.sample_rate_hz)


def estimate_rir(recording: SampledSignal, reference_sweep: SampledSignal,
                 epsilon: float | None = None,
                 window: WindowKind = WindowKind.HANN) -> SampledSignal:
    """Approximate RIR via per-bin magnitude division.

    Both signals are windowed and transformed; the RIR magnitude is
    max(0, |c_y|/|c_x|) with bins where |c_x| < epsilon set to 0 (the
    division would be undefined at dead bins), and the RECORDING's phase
    is kept as-is. ``epsilon`` defaults to 1e-6 * max|c_x|.
    """
    n = len(recording)
    if n != len(reference_sweep):
        raise ConfigError(
            f"recording length {n} != reference length {len(reference_sweep)}"
        )
    if not _is_power_of_two(n):
        raise ConfigError(f"frame length {n} is not a power of two")

    x_w = apply_window(reference_sweep.samples, window)
    y_w = apply_window(recording.samples, window)
    spec_x = forward_transform(SampledSignal(x_w, recording.sample_rate_hz))
    spec_y = forward_transform(SampledSignal(y_w, recording.sample_rate_hz))

    abs_x = spec_x.magnitudes
    if epsilon is None:
        epsilon = 1e-6 * np.max(abs_x)
    live = abs_x >= epsilon
    rir_mag = np.zeros(n)
    rir_mag[live] = np.maximum(0.0, spec_y.magnitudes[live] / abs_x[live])

    return inverse_transform(Spectrum(rir_mag, spec_y.phases, n),
                             recording.sample_rate_hz)
