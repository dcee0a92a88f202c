"""Synthetic LTI acoustic scenes for desk-scale validation.

Each fill-level class maps to a sparse tap-train impulse response: higher
fill brings the first reflection earlier, packs reflections closer and
makes them decay faster. Recordings are the sweep convolved with the IR
plus white noise at a target SNR; the standard preprocessing chain
(spectral subtraction, then RIR estimation) turns them into labeled RIR
rows shaped like the container experiment's measurement tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dsp import SampledSignal, SweepConfig, estimate_rir, generate_stepped_sweep, spectral_subtract
from .ensemble import DatasetRow, LabeledDataset
from .errors import ConfigError

DEFAULT_BUCKETS: dict[int, tuple[int, ...]] = {
    0: (0, 5, 10),
    25: (20, 25, 30),
    50: (45, 50, 55),
    75: (70, 75, 80),
    100: (90, 95, 100),
}

DEFAULT_MATERIALS: dict[str, float] = {"straw": 1.0, "cb": 1.15}


@dataclass(frozen=True)
class SceneConfig:
    sweep: SweepConfig = field(default_factory=SweepConfig)
    buckets: dict[int, tuple[int, ...]] = field(
        default_factory=lambda: dict(DEFAULT_BUCKETS))
    materials: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_MATERIALS))
    snr_db: float = 20.0
    alpha: float = 1.0
    # tap-train geometry (samples)
    direct_delay: int = 4
    base_delay: int = 260          # first reflection at fill 0
    min_delay: int = 40            # first reflection at fill 100
    n_taps: int = 8
    tap_spacing: int = 34
    spacing_shrink: float = 0.5    # spacing at fill 100 = (1 - shrink) * spacing
    reflect_gain_empty: float = 0.2    # first-reflection gain at fill 0
    reflect_gain_full: float = 5.0     # first-reflection gain at fill 100
    decay_empty: float = 0.5       # per-tap gain ratio at fill 0
    decay_full: float = 0.9        # per-tap gain ratio at fill 100 (longer tail)
    # per-row jitter
    jitter_gain_pct: float = 10.0
    jitter_delay: int = 3
    # division guard for RIR estimation, relative to max |c_x|; None keeps
    # the estimator's own default. The default is deliberately coarse so
    # near-dead excitation bins do not amplify noise into the features.
    rir_epsilon_rel: float | None = 0.1
    # stored-row layout: the estimated RIR's energy sits around the sweep
    # onset, so stored rows start there
    rir_crop_start: int = 2048
    rir_store_len: int = 512

    def __post_init__(self):
        if self.snr_db != self.snr_db:  # NaN
            raise ConfigError("snr_db must not be NaN")
        if self.jitter_gain_pct < 0 or self.jitter_delay < 0:
            raise ConfigError("jitter magnitudes must be non-negative")
        if not (0 <= self.min_delay <= self.base_delay):
            raise ConfigError("need 0 <= min_delay <= base_delay")
        max_delay = self.max_tap_delay()
        if max_delay >= self.sweep.frame_len - self.sweep.end_sample:
            raise ConfigError(
                f"maximum tap delay {max_delay} does not fit after the sweep"
            )
        if self.rir_crop_start + self.rir_store_len > self.sweep.frame_len:
            raise ConfigError("stored RIR slice exceeds the frame")

    def max_tap_delay(self) -> int:
        return (self.base_delay + (self.n_taps - 1) * self.tap_spacing
                + self.jitter_delay)


def make_class_ir(class_id: int, fine_fill_percent: float,
                  rng: np.random.Generator, cfg: SceneConfig,
                  material: str = "straw") -> np.ndarray:
    """Sparse decaying tap train for one (class, fine fill) combination.

    The mapping is monotone in fill: the first reflection arrives earlier
    and reflections decay faster as the container fills up.
    """
    if class_id not in cfg.buckets:
        raise ConfigError(f"unknown class {class_id}")
    if material not in cfg.materials:
        raise ConfigError(f"unknown material '{material}'")
    phi = fine_fill_percent / 100.0

    d1 = int(round(cfg.base_delay - (cfg.base_delay - cfg.min_delay) * phi))
    spacing = max(1, int(round(cfg.tap_spacing * (1.0 - cfg.spacing_shrink * phi))))
    decay = cfg.decay_empty + (cfg.decay_full - cfg.decay_empty) * phi
    decay = min(0.98, decay * cfg.materials[material])
    reflect_gain = cfg.reflect_gain_empty + (cfg.reflect_gain_full - cfg.reflect_gain_empty) * phi

    delays = [cfg.direct_delay]
    gains = [1.0]
    for k in range(cfg.n_taps):
        delay = d1 + k * spacing
        if cfg.jitter_delay > 0:
            delay += int(rng.integers(-cfg.jitter_delay, cfg.jitter_delay + 1))
        gain = reflect_gain * decay ** k
        if cfg.jitter_gain_pct > 0:
            gain *= 1.0 + rng.uniform(-cfg.jitter_gain_pct, cfg.jitter_gain_pct) / 100.0
        delays.append(max(0, delay))
        gains.append(gain)

    ir = np.zeros(max(delays) + 1)
    for d, g in zip(delays, gains):
        ir[d] += g
    return ir


def simulate_recording(ir: np.ndarray, sweep: SampledSignal, snr_db: float,
                       rng: np.random.Generator) -> SampledSignal:
    """Convolve the sweep frame with the IR (truncated to the frame) and
    add white noise across the whole frame at the requested SNR.

    The sweep frame is zero before the sweep onset and every tap delay is
    non-negative, so the pre-sweep region contains noise only: exactly
    the region used for the noise estimate.
    """
    ir = np.asarray(ir, dtype=float)
    frame_len = len(sweep)
    clean = np.convolve(sweep.samples, ir)[:frame_len]
    if np.isinf(snr_db):
        return SampledSignal(clean, sweep.sample_rate_hz)
    signal_power = float(np.mean(clean ** 2))
    noise_power = signal_power / (10.0 ** (snr_db / 10.0))
    noise = rng.normal(0.0, np.sqrt(noise_power), size=frame_len)
    return SampledSignal(clean + noise, sweep.sample_rate_hz)


def synthesize_rir_row(ir: np.ndarray, sweep_frame: SampledSignal,
                       cfg: SceneConfig, rng: np.random.Generator) -> np.ndarray:
    """Run one recording through the full preprocessing chain and return
    the stored RIR slice."""
    recording = simulate_recording(ir, sweep_frame, cfg.snr_db, rng)
    denoised = spectral_subtract(recording, cfg.sweep, alpha=cfg.alpha)
    epsilon = None
    if cfg.rir_epsilon_rel is not None:
        from .dsp import WindowKind, apply_window, forward_transform
        spec_x = forward_transform(
            SampledSignal(apply_window(sweep_frame.samples, WindowKind.HANN),
                          sweep_frame.sample_rate_hz))
        epsilon = cfg.rir_epsilon_rel * float(np.max(spec_x.magnitudes))
    rir = estimate_rir(denoised, sweep_frame, epsilon=epsilon)
    return rir.samples[cfg.rir_crop_start:cfg.rir_crop_start + cfg.rir_store_len]


def generate_dataset(cfg: SceneConfig, rows_per_class_per_fine_fill: int,
                     seed: int, materials: tuple[str, ...] | None = None) -> LabeledDataset:
    """Labeled RIR rows for every (bucket, fine fill, material) cell.

    Row i draws from a child rng derived from (seed, i), so generation is
    deterministic and could be parallelized per row without changing
    results.
    """
    if rows_per_class_per_fine_fill < 1:
        raise ConfigError("rows_per_class_per_fine_fill must be >= 1")
    if materials is None:
        materials = tuple(sorted(cfg.materials))
    for m in materials:
        if m not in cfg.materials:
            raise ConfigError(f"unknown material '{m}'")

    sweep_frame = generate_stepped_sweep(cfg.sweep)
    rows = []
    row_index = 0
    for material in materials:
        for bucket in sorted(cfg.buckets):
            for fine in cfg.buckets[bucket]:
                for _ in range(rows_per_class_per_fine_fill):
                    rng = np.random.default_rng(
                        np.random.SeedSequence(entropy=seed, spawn_key=(row_index,)))
                    ir = make_class_ir(bucket, fine, rng, cfg, material)
                    rir = synthesize_rir_row(ir, sweep_frame, cfg, rng)
                    rows.append(DatasetRow(rir=rir, label=bucket,
                                           fine_fill_percent=float(fine),
                                           material=material))
                    row_index += 1
    return LabeledDataset(rows=tuple(rows), sample_rate_hz=cfg.sweep.sample_rate_hz)
