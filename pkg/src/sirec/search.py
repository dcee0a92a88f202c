"""Stochastic hyperparameter search over the ensemble's configuration.

Draws configurations uniformly (rejection-sampling those violating
min_len <= max_len <= segment_length), evaluates each with a single
fit/score, and returns all results ranked by macro-F1.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import ensemble
from .ensemble import LabeledDataset, TrainConfig
from .errors import ConfigError
from .evaluation import f1_macro
from .features import IntervalBounds

_REJECTION_CAP = 100_000


@dataclass(frozen=True)
class SearchSpace:
    """Inclusive integer ranges for each searched parameter."""

    segment_length: tuple[int, int] = (100, 500)
    n_estimators: tuple[int, int] = (10, 200)
    max_len: tuple[int, int] = (10, 200)
    min_len: tuple[int, int] = (10, 200)
    random_state: tuple[int, int] = (0, 2**32 - 1)

    def __post_init__(self):
        for name in ("segment_length", "n_estimators", "max_len", "min_len",
                     "random_state"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"empty range for {name}: ({lo}, {hi})")
        if self.min_len[0] < 2:
            raise ConfigError("min_len range must start at >= 2")
        if self.n_estimators[0] < 1:
            raise ConfigError("n_estimators range must start at >= 1")
        if not self._satisfiable():
            raise ConfigError(
                "no configuration can satisfy min_len <= max_len <= segment_length"
            )

    def _satisfiable(self) -> bool:
        # need some max_len m with min_len_lo <= m <= segment_length_hi
        lo = max(self.max_len[0], self.min_len[0])
        return lo <= self.max_len[1] and lo <= self.segment_length[1]


@dataclass(frozen=True)
class SearchResult:
    config: TrainConfig
    f1: float
    rank: int


def _draw_config(rng: np.random.Generator, space: SearchSpace) -> TrainConfig:
    for _ in range(_REJECTION_CAP):
        seg = int(rng.integers(space.segment_length[0], space.segment_length[1] + 1))
        n_est = int(rng.integers(space.n_estimators[0], space.n_estimators[1] + 1))
        max_len = int(rng.integers(space.max_len[0], space.max_len[1] + 1))
        min_len = int(rng.integers(space.min_len[0], space.min_len[1] + 1))
        seed = int(rng.integers(space.random_state[0], space.random_state[1] + 1))
        if min_len <= max_len <= seg:
            return TrainConfig(n_estimators=n_est, segment_length=seg,
                               bounds=IntervalBounds(min_len, max_len),
                               random_state=seed)
    raise ConfigError("rejection sampling failed to find a valid configuration")


def evaluate_config(train: LabeledDataset, test: LabeledDataset,
                    config: TrainConfig) -> float:
    """One fit/score, exactly as the search performs it."""
    model = ensemble.fit(train, config)
    return f1_macro(test.labels(), ensemble.predict_dataset(model, test))


def stochastic_search(train: LabeledDataset, test: LabeledDataset,
                      space: SearchSpace, budget: int,
                      meta_seed: int) -> list[SearchResult]:
    """Evaluate ``budget`` uniformly drawn configs; results sorted by F1
    descending, ties kept in draw order. Deterministic given meta_seed.

    Configs are pre-drawn sequentially from the meta seed, so evaluating
    them in parallel could never change which ones are tried.
    """
    if budget < 1:
        raise ConfigError("budget must be >= 1")
    rng = np.random.default_rng(meta_seed)
    configs = [_draw_config(rng, space) for _ in range(budget)]

    scored = [(evaluate_config(train, test, cfg), i, cfg)
              for i, cfg in enumerate(configs)]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [SearchResult(config=cfg, f1=f1, rank=r)
            for r, (f1, _, cfg) in enumerate(scored)]


def results_to_csv(results: list[SearchResult]) -> str:
    """CSV with the fixed column order:
    segment_length, n_estimators, max_len, min_len, random_state, f1."""
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["segment_length", "n_estimators", "max_len", "min_len",
                "random_state", "f1"])
    for r in results:
        c = r.config
        w.writerow([c.segment_length, c.n_estimators, c.bounds.max_len,
                    c.bounds.min_len, c.random_state, f"{r.f1:.9g}"])
    return buf.getvalue()
