"""Excitation and preprocessing walkthrough.

Generates the stepped sine sweep, simulates a noisy recording of it
through a toy container response, cleans the recording with spectral
subtraction and recovers the impulse response by magnitude-domain
deconvolution. Run with python3; prints a short trace of each stage.
"""

import numpy as np

from sirec.dsp import SweepConfig, estimate_rir, generate_stepped_sweep, spectral_subtract
from sirec.synth import SceneConfig, make_class_ir, simulate_recording

# --- the excitation -------------------------------------------------------
cfg = SweepConfig()
sweep = generate_stepped_sweep(cfg)
print(f"sweep: {len(sweep)} samples at {cfg.sample_rate_hz:.0f} Hz, "
      f"{cfg.f0_hz:.0f} -> {cfg.f1_hz:.0f} Hz in {cfg.f_step_hz:.0f} Hz steps")
print(f"  active region: samples [{cfg.start_sample}, {cfg.end_sample})")
print(f"  {len(cfg.step_frequencies())} frequency steps, peak amplitude "
      f"{np.max(np.abs(sweep.samples)):.3f}")

# --- a simulated half-full container --------------------------------------
scene = SceneConfig()
rng = np.random.default_rng(0)
ir = make_class_ir(50, 50, rng, scene)
recording = simulate_recording(ir, sweep, snr_db=20.0, rng=rng)
taps = np.nonzero(ir)[0]
print(f"\nscene: {len(taps)} reflections, first at sample {taps[1]}, "
      f"recording SNR 20 dB")

# --- spectral subtraction --------------------------------------------------
# the 1024 samples ending 200 before the sweep onset estimate the noise
denoised = spectral_subtract(recording, cfg)
before = np.sqrt(np.mean(recording.samples[:cfg.start_sample - 200] ** 2))
after = np.sqrt(np.mean(denoised.samples[:cfg.start_sample - 200] ** 2))
print("\nspectral subtraction:")
print(f"  pre-sweep RMS before {before:.4f}, after {after:.4f} "
      f"({20 * np.log10(after / before):.1f} dB)")

# --- impulse response estimation ------------------------------------------
rir = estimate_rir(denoised, sweep)
stored = rir.samples[scene.rir_crop_start:scene.rir_crop_start + scene.rir_store_len]
print("\nestimated impulse response:")
print(f"  frame energy {np.sum(rir.samples ** 2):.2f}, "
      f"stored slice [{scene.rir_crop_start}, "
      f"{scene.rir_crop_start + scene.rir_store_len}) holds "
      f"{100 * np.sum(stored ** 2) / np.sum(rir.samples ** 2):.1f}% of it")
