"""Scoring and the repeated train/test protocol.

Macro-F1, row-normalized confusion matrices, and the repeated-evaluation
loop that refits the ensemble with a per-iteration derived seed and
aggregates scores, a pooled confusion matrix and wall-clock timings.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, replace

import numpy as np

from . import ensemble
from .ensemble import LabeledDataset, SirecModel, TrainConfig, derive_tree_seed_sequence
from .errors import ConfigError, EvaluationError


def f1_macro(y_true, y_pred) -> float:
    """Unweighted mean of per-class F1; a class with precision+recall = 0
    contributes 0."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape or y_true.ndim != 1 or y_true.size == 0:
        raise ConfigError("y_true and y_pred must be equal-length, non-empty")
    classes = np.unique(np.concatenate([y_true, y_pred]))
    scores = []
    for c in classes:
        tp = np.sum((y_true == c) & (y_pred == c))
        fp = np.sum((y_true != c) & (y_pred == c))
        fn = np.sum((y_true == c) & (y_pred != c))
        denom = 2 * tp + fp + fn
        scores.append(0.0 if denom == 0 else 2 * tp / denom)
    return float(np.mean(scores))


def confusion_matrix_normalized(y_true, y_pred, classes):
    """M[i][j] = P(pred=j | true=i). Rows without support are all-zero;
    the returned mask flags them. Returns (matrix, zero_support_mask)."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    classes = list(classes)
    index = {c: i for i, c in enumerate(classes)}
    for v in np.concatenate([y_true, y_pred]):
        if v not in index:
            raise ConfigError(f"label {v} not in declared classes {classes}")
    counts = np.zeros((len(classes), len(classes)))
    for t, p in zip(y_true, y_pred):
        counts[index[t], index[p]] += 1
    support = counts.sum(axis=1)
    matrix = np.zeros_like(counts)
    has = support > 0
    matrix[has] = counts[has] / support[has, None]
    return matrix, ~has


class classifier_adapter:
    """Wrap any fit/predict pair so run_repeated_eval can drive it.

    ``fit_fn(train: LabeledDataset, config: TrainConfig) -> handle`` and
    ``predict_fn(handle, rir) -> label``. An optional ``predict_many_fn``
    speeds up scoring.
    """

    def __init__(self, fit_fn, predict_fn, predict_many_fn=None):
        self.fit = fit_fn
        self.predict = predict_fn
        self.predict_many = predict_many_fn

    def predict_rows(self, handle, dataset: LabeledDataset) -> np.ndarray:
        if self.predict_many is not None:
            return np.asarray(self.predict_many(handle, [r.rir for r in dataset.rows]))
        return np.array([self.predict(handle, r.rir) for r in dataset.rows])


def native_classifier() -> classifier_adapter:
    return classifier_adapter(ensemble.fit, ensemble.predict, ensemble.predict_many)


@dataclass
class EvalReport:
    scores: list[float]
    classes: list[int]
    confusion: np.ndarray            # pooled over iterations, row-normalized
    zero_support: np.ndarray
    fit_seconds: float
    predict_seconds: float

    @property
    def summary(self) -> dict:
        s = np.asarray(self.scores)
        return {
            "mean": float(np.mean(s)),
            "median": float(np.median(s)),
            "q1": float(np.percentile(s, 25)),
            "q3": float(np.percentile(s, 75)),
            "min": float(np.min(s)),
            "max": float(np.max(s)),
        }

    def to_json(self) -> str:
        return json.dumps({
            "scores": self.scores,
            "summary": self.summary,
            "classes": self.classes,
            "confusion": self.confusion.tolist(),
            "zero_support_classes": [c for c, z in zip(self.classes, self.zero_support) if z],
            "timing": {"fit_seconds": self.fit_seconds,
                       "predict_seconds": self.predict_seconds},
        }, indent=2)

    def to_text(self) -> str:
        lines = ["macro-F1 over %d iteration(s)" % len(self.scores)]
        for k, v in self.summary.items():
            lines.append(f"  {k:>6}: {v:.4f}")
        lines.append("confusion matrix (rows = true label):")
        header = "        " + " ".join(f"{c:>7}" for c in self.classes)
        lines.append(header)
        for c, row in zip(self.classes, self.confusion):
            lines.append(f"{c:>7} " + " ".join(f"{v:7.3f}" for v in row))
        lines.append(f"fit: {self.fit_seconds:.2f} s, predict: {self.predict_seconds:.2f} s")
        return "\n".join(lines)

    def scores_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["iteration", "f1_macro"])
        for i, s in enumerate(self.scores):
            w.writerow([i, f"{s:.9g}"])
        return buf.getvalue()


def derive_iteration_seed(base_seed: int, iteration: int) -> int:
    """Stable 32-bit seed for one evaluation iteration."""
    return int(derive_tree_seed_sequence(base_seed, iteration).generate_state(1)[0])


def run_repeated_eval(train: LabeledDataset, test: LabeledDataset,
                      config: TrainConfig, iterations: int, base_seed: int,
                      classifier: classifier_adapter | None = None) -> EvalReport:
    """Refit with a fresh derived seed per iteration, score on the fixed
    test set, pool the confusion counts."""
    if iterations < 1:
        raise ConfigError("iterations must be >= 1")
    clf = classifier if classifier is not None else native_classifier()

    classes = sorted(set(train.classes) | set(test.classes))
    pooled = np.zeros((len(classes), len(classes)))
    index = {c: i for i, c in enumerate(classes)}
    y_true = test.labels()

    scores = []
    fit_s = 0.0
    pred_s = 0.0
    for i in range(iterations):
        cfg_i = replace(config, random_state=derive_iteration_seed(base_seed, i))
        try:
            t0 = time.perf_counter()
            handle = clf.fit(train, cfg_i)
            t1 = time.perf_counter()
            y_pred = clf.predict_rows(handle, test)
            t2 = time.perf_counter()
        except Exception as e:
            raise EvaluationError(f"iteration {i} failed: {e}") from e
        fit_s += t1 - t0
        pred_s += t2 - t1
        scores.append(f1_macro(y_true, y_pred))
        for t, p in zip(y_true, y_pred):
            pooled[index[t], index[p]] += 1

    support = pooled.sum(axis=1)
    matrix = np.zeros_like(pooled)
    has = support > 0
    matrix[has] = pooled[has] / support[has, None]
    return EvalReport(scores=scores, classes=classes, confusion=matrix,
                      zero_support=~has, fit_seconds=fit_s, predict_seconds=pred_s)


def evaluate_model(model: SirecModel, dataset: LabeledDataset) -> EvalReport:
    """Score a single trained model on a dataset (no refitting)."""
    y_true = dataset.labels()
    t0 = time.perf_counter()
    y_pred = ensemble.predict_dataset(model, dataset)
    t1 = time.perf_counter()
    classes = sorted(set(dataset.classes) | set(model.classes))
    matrix, zero = confusion_matrix_normalized(y_true, y_pred, classes)
    return EvalReport(scores=[f1_macro(y_true, y_pred)], classes=classes,
                      confusion=matrix, zero_support=zero,
                      fit_seconds=0.0, predict_seconds=t1 - t0)
