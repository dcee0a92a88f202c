"""Per-tree interval sampling and the three per-tree features.

Each tree in the ensemble owns one random interval and a matching
start-anchored fixed interval of the same length. From the random interval
we take the min/max ratio of the magnitude spectrum; from the fixed
interval the mean and standard deviation of adjacent-sample differences,
which are invariant to constant vertical shifts of the series.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class IntervalBounds:
    min_len: int
    max_len: int

    def validate(self, segment_length: int) -> None:
        if not (2 <= self.min_len <= self.max_len <= segment_length):
            raise ConfigError(
                f"need 2 <= min_len ({self.min_len}) <= max_len ({self.max_len})"
                f" <= segment_length ({segment_length})"
            )


@dataclass(frozen=True)
class IntervalPair:
    """Random interval [rnd_start, rnd_start+length) and the fixed interval
    [0, length) it is paired with."""

    rnd_start: int
    length: int

    def __post_init__(self):
        if self.length < 2:
            raise ConfigError("interval length must be >= 2")
        if self.rnd_start < 0:
            raise ConfigError("rnd_start must be >= 0")

    def fits(self, segment_length: int) -> bool:
        return self.rnd_start + self.length <= segment_length


@dataclass(frozen=True)
class FeatureVector:
    spectral_ratio: float
    diff_mean: float
    diff_std: float

    def as_array(self) -> np.ndarray:
        return np.array([self.spectral_ratio, self.diff_mean, self.diff_std])


N_FEATURES = 3
FEATURE_NAMES = ("spectral_ratio", "diff_mean", "diff_std")


def sample_interval_pair(rng: np.random.Generator, segment_length: int,
                         bounds: IntervalBounds) -> IntervalPair:
    """Draw length uniform in [min_len, max_len], then a start position
    uniform over all in-bounds placements. Deterministic given rng state."""
    bounds.validate(segment_length)
    length = int(rng.integers(bounds.min_len, bounds.max_len + 1))
    rnd_start = int(rng.integers(0, segment_length - length + 1))
    return IntervalPair(rnd_start=rnd_start, length=length)


def diff_mean(values) -> float:
    """Mean of adjacent differences v[k] - v[k+1]; telescopes to
    (v[0] - v[n-1]) / (n-1)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ConfigError("diff_mean needs at least 2 values")
    return float(np.mean(v[:-1] - v[1:]))


def diff_std(values) -> float:
    """Standard deviation of adjacent differences, divisor n-1 (= number
    of differences)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ConfigError("diff_std needs at least 2 values")
    d = v[:-1] - v[1:]
    return float(np.sqrt(np.mean((d - np.mean(d)) ** 2)))


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def spectral_min_max_ratio(segment, exclude_dc: bool = True) -> float:
    """Min/max ratio of the magnitude spectrum of the segment.

    The segment is zero-padded to the next power of two; min and max run
    over the one-sided bins [1, N/2] (DC excluded by default so the ratio
    is not dominated by segment offset). Returns 0.0 for an all-zero
    segment.
    """
    seg = np.asarray(segment, dtype=float)
    if seg.size < 2:
        raise ConfigError("spectral_min_max_ratio needs at least 2 values")
    n = _next_pow2(seg.size)
    mags = np.abs(np.fft.rfft(seg, n=n))
    sel = mags[1:] if exclude_dc else mags
    top = float(np.max(sel))
    if top == 0.0:
        return 0.0
    return float(np.min(sel) / top)


def extract_features(rir_segment, pair: IntervalPair,
                     exclude_dc: bool = True) -> FeatureVector:
    """Spectral ratio from the random sub-slice; diff statistics from the
    start-anchored fixed sub-slice of the same length."""
    seg = np.asarray(rir_segment, dtype=float)
    if not pair.fits(seg.size):
        raise ConfigError(
            f"interval [{pair.rnd_start}, {pair.rnd_start + pair.length}) "
            f"exceeds segment of {seg.size} samples"
        )
    rnd = seg[pair.rnd_start:pair.rnd_start + pair.length]
    fix = seg[:pair.length]
    return FeatureVector(
        spectral_ratio=spectral_min_max_ratio(rnd, exclude_dc=exclude_dc),
        diff_mean=diff_mean(fix),
        diff_std=diff_std(fix),
    )


def extract_features_matrix(segments: np.ndarray, pair: IntervalPair,
                            exclude_dc: bool = True) -> np.ndarray:
    """Vectorized extract_features over rows of a (n_rows, segment_length)
    matrix; returns (n_rows, 3) in FEATURE_NAMES order."""
    segments = np.asarray(segments, dtype=float)
    if segments.ndim != 2:
        raise ConfigError("segments must be 2-D (rows, segment_length)")
    if not pair.fits(segments.shape[1]):
        raise ConfigError("interval pair exceeds segment length")
    rnd = segments[:, pair.rnd_start:pair.rnd_start + pair.length]
    fix = segments[:, :pair.length]

    n = _next_pow2(pair.length)
    mags = np.abs(np.fft.rfft(rnd, n=n, axis=1))
    sel = mags[:, 1:] if exclude_dc else mags
    top = sel.max(axis=1)
    ratio = np.where(top > 0, sel.min(axis=1) / np.where(top > 0, top, 1.0), 0.0)

    d = fix[:, :-1] - fix[:, 1:]
    mu = d.mean(axis=1)
    sd = np.sqrt(np.mean((d - mu[:, None]) ** 2, axis=1))
    return np.column_stack([ratio, mu, sd])
