"""The random-interval decision-tree ensemble.

Every estimator owns one interval pair and one axis-aligned CART tree
grown on the three features of that pair. Prediction is a plurality vote
over the trees; ties go to the smallest class label. Training is
bit-deterministic: per-tree rng streams are derived from
(random_state, tree_index) before any work happens.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, SchemaError, TrainingError
from .features import (
    N_FEATURES,
    IntervalBounds,
    IntervalPair,
    extract_features,
    extract_features_matrix,
    sample_interval_pair,
)

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    n_estimators: int
    segment_length: int
    bounds: IntervalBounds
    random_state: int
    max_depth: int | None = None
    min_samples_leaf: int = 1
    bootstrap: bool = False
    segment_offset: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ConfigError("n_estimators must be >= 1")
        self.bounds.validate(self.segment_length)
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1 when set")
        if self.segment_offset < 0:
            raise ConfigError("segment_offset must be >= 0")


@dataclass(frozen=True)
class Node:
    """One flat tree node; internal nodes carry (feature, threshold,
    left, right), leaves carry the predicted label."""

    kind: str  # "split" | "leaf"
    feature: int | None = None
    threshold: float | None = None
    left: int | None = None
    right: int | None = None
    label: int | None = None


@dataclass(frozen=True)
class DecisionTree:
    nodes: tuple[Node, ...]

    def predict_one(self, features: np.ndarray) -> int:
        i = 0
        while True:
            node = self.nodes[i]
            if node.kind == "leaf":
                return node.label
            i = node.left if features[node.feature] <= node.threshold else node.right

    def predict_many(self, feature_matrix: np.ndarray) -> np.ndarray:
        feat = np.array([n.feature if n.kind == "split" else 0 for n in self.nodes])
        thr = np.array([n.threshold if n.kind == "split" else 0.0 for n in self.nodes])
        left = np.array([n.left if n.kind == "split" else -1 for n in self.nodes])
        right = np.array([n.right if n.kind == "split" else -1 for n in self.nodes])
        is_leaf = np.array([n.kind == "leaf" for n in self.nodes])
        label = np.array([n.label if n.kind == "leaf" else -1 for n in self.nodes])

        idx = np.zeros(feature_matrix.shape[0], dtype=int)
        active = ~is_leaf[idx]
        while np.any(active):
            cur = idx[active]
            go_left = feature_matrix[active, feat[cur]] <= thr[cur]
            idx[active] = np.where(go_left, left[cur], right[cur])
            active = ~is_leaf[idx]
        return label[idx]


@dataclass(frozen=True)
class DatasetRow:
    rir: np.ndarray
    label: int
    fine_fill_percent: float = 0.0
    material: str = ""

    def __post_init__(self):
        object.__setattr__(self, "rir", np.asarray(self.rir, dtype=float))


@dataclass(frozen=True)
class LabeledDataset:
    rows: tuple[DatasetRow, ...]
    sample_rate_hz: float = 10_000.0

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def classes(self) -> list[int]:
        return sorted({r.label for r in self.rows})

    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.rows], dtype=int)

    def segment_matrix(self, segment_length: int, offset: int = 0) -> np.ndarray:
        """Stack the [offset, offset+segment_length) slice of every RIR."""
        short = [i for i, r in enumerate(self.rows)
                 if r.rir.size < offset + segment_length]
        if short:
            raise TrainingError(
                f"row {short[0]} has {self.rows[short[0]].rir.size} samples, "
                f"need >= {offset + segment_length}"
            )
        return np.stack([r.rir[offset:offset + segment_length] for r in self.rows])


@dataclass(frozen=True)
class SirecModel:
    config: TrainConfig
    classes: tuple[int, ...]
    pairs: tuple[IntervalPair, ...]
    trees: tuple[DecisionTree, ...]
    format_version: int = MODEL_FORMAT_VERSION

    def __post_init__(self):
        if len(self.trees) != self.config.n_estimators:
            raise ConfigError("number of trees must equal n_estimators")
        if len(self.pairs) != len(self.trees):
            raise ConfigError("one interval pair per tree required")
        for p in self.pairs:
            if not p.fits(self.config.segment_length):
                raise ConfigError("interval pair exceeds segment_length")


def derive_tree_seed_sequence(random_state: int, index: int) -> np.random.SeedSequence:
    """Per-tree (or per-iteration) seed stream; derived up-front so that
    parallel execution cannot change results."""
    return np.random.SeedSequence(entropy=random_state, spawn_key=(index,))


def _f32(x: float) -> float:
    """Quantize to the nearest 32-bit float, returned as a Python float.

    Thresholds are stored at 32-bit precision so the exported embedded
    runtime reproduces decisions exactly.
    """
    return float(np.float32(x))


def _majority_label(y: np.ndarray, class_list: np.ndarray) -> int:
    counts = np.array([np.sum(y == c) for c in class_list])
    return int(class_list[int(np.argmax(counts))])  # argmax -> smallest label on ties


def _gini_from_counts(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    """Gini impurity per candidate given (n_cand, n_classes) counts."""
    with np.errstate(invalid="ignore", divide="ignore"):
        p = counts / totals[:, None]
    g = 1.0 - np.sum(p * p, axis=1)
    g[totals == 0] = 0.0
    return g


def _best_split(X: np.ndarray, y_idx: np.ndarray, n_classes: int,
                min_samples_leaf: int):
    """Best (feature, threshold) by weighted Gini impurity.

    Candidate thresholds are float32-quantized midpoints of consecutive
    distinct sorted values. Ties break to the lowest feature index, then
    the lowest threshold. Returns None when no valid candidate exists.
    """
    n = X.shape[0]
    best = None  # (weighted_gini, feature, threshold, n_left)
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y_idx[order]
        distinct = np.nonzero(xs[1:] > xs[:-1])[0]
        if distinct.size == 0:
            continue
        thr = ((xs[distinct] + xs[distinct + 1]) / 2.0).astype(np.float32).astype(float)
        thr = np.unique(thr)
        n_left = np.searchsorted(xs, thr, side="right")
        ok = (n_left >= min_samples_leaf) & (n - n_left >= min_samples_leaf) \
            & (n_left > 0) & (n_left < n)
        if not np.any(ok):
            continue
        thr, n_left = thr[ok], n_left[ok]

        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), ys] = 1.0
        cum = np.cumsum(onehot, axis=0)
        left_counts = cum[n_left - 1]
        right_counts = cum[-1] - left_counts
        nl = n_left.astype(float)
        nr = n - nl
        weighted = (nl * _gini_from_counts(left_counts, nl)
                    + nr * _gini_from_counts(right_counts, nr)) / n
        i = int(np.argmin(weighted))  # first minimum -> lowest threshold
        cand = (float(weighted[i]), f, float(thr[i]), int(n_left[i]))
        if best is None or cand[0] < best[0] - 1e-15:
            best = cand
    return best


def _grow_tree(X: np.ndarray, y: np.ndarray, class_list: np.ndarray,
               max_depth: int | None, min_samples_leaf: int) -> DecisionTree:
    """CART with Gini impurity, grown to purity by default.

    Zero-gain splits are allowed as long as both children are non-empty,
    so distinguishable rows always end up in pure leaves.
    """
    class_to_idx = {c: i for i, c in enumerate(class_list)}
    y_idx = np.array([class_to_idx[v] for v in y])
    nodes: list[Node] = []

    def build(rows: np.ndarray, depth: int) -> int:
        my_y = y[rows]
        my_idx = len(nodes)
        if (np.all(my_y == my_y[0])
                or (max_depth is not None and depth >= max_depth)
                or rows.size < 2 * min_samples_leaf):
            nodes.append(Node(kind="leaf", label=_majority_label(my_y, class_list)))
            return my_idx
        split = _best_split(X[rows], y_idx[rows], len(class_list), min_samples_leaf)
        if split is None:
            nodes.append(Node(kind="leaf", label=_majority_label(my_y, class_list)))
            return my_idx
        _, feature, threshold, _ = split
        nodes.append(None)  # placeholder, patched below
        go_left = X[rows, feature] <= threshold
        left_idx = build(rows[go_left], depth + 1)
        right_idx = build(rows[~go_left], depth + 1)
        nodes[my_idx] = Node(kind="split", feature=feature, threshold=threshold,
                             left=left_idx, right=right_idx)
        return my_idx

    build(np.arange(X.shape[0]), 0)
    return DecisionTree(nodes=tuple(nodes))


def fit(dataset: LabeledDataset, config: TrainConfig) -> SirecModel:
    """Train the ensemble: one interval pair + one tree per estimator."""
    if len(dataset) == 0:
        raise TrainingError("dataset is empty")
    classes = dataset.classes
    if len(classes) < 2:
        raise TrainingError("training needs at least 2 distinct classes")
    class_list = np.array(classes, dtype=int)

    segments = dataset.segment_matrix(config.segment_length, config.segment_offset)
    y = dataset.labels()

    pairs = []
    trees = []
    for i in range(config.n_estimators):
        rng = np.random.default_rng(
            derive_tree_seed_sequence(config.random_state, i))
        pair = sample_interval_pair(rng, config.segment_length, config.bounds)
        if config.bootstrap:
            rows = rng.integers(0, len(dataset), size=len(dataset))
        else:
            rows = np.arange(len(dataset))
        X = extract_features_matrix(segments[rows], pair)
        trees.append(_grow_tree(X, y[rows], class_list,
                                config.max_depth, config.min_samples_leaf))
        pairs.append(pair)

    return SirecModel(config=config, classes=tuple(classes),
                      pairs=tuple(pairs), trees=tuple(trees))


def _vote(per_tree_labels: np.ndarray, classes: tuple[int, ...]) -> np.ndarray:
    """Plurality vote per column; ties go to the smallest class label."""
    class_arr = np.array(classes)
    counts = np.stack([(per_tree_labels == c).sum(axis=0) for c in class_arr])
    return class_arr[np.argmax(counts, axis=0)]  # first maximum = smallest label


def predict(model: SirecModel, rir) -> int:
    """Classify one RIR from its leading segment_length samples."""
    rir = np.asarray(rir, dtype=float)
    cfg = model.config
    if rir.size < cfg.segment_offset + cfg.segment_length:
        raise ConfigError(
            f"rir has {rir.size} samples, need >= "
            f"{cfg.segment_offset + cfg.segment_length}"
        )
    seg = rir[cfg.segment_offset:cfg.segment_offset + cfg.segment_length]
    votes = np.array([
        tree.predict_one(extract_features(seg, pair).as_array())
        for pair, tree in zip(model.pairs, model.trees)
    ])
    return int(_vote(votes[:, None], model.classes)[0])


def predict_many(model: SirecModel, rirs) -> np.ndarray:
    """Vectorized predict over an iterable of RIR rows."""
    cfg = model.config
    rirs = [np.asarray(r, dtype=float) for r in rirs]
    need = cfg.segment_offset + cfg.segment_length
    for i, r in enumerate(rirs):
        if r.size < need:
            raise ConfigError(f"row {i} has {r.size} samples, need >= {need}")
    segments = np.stack([r[cfg.segment_offset:need] for r in rirs])
    votes = np.stack([
        tree.predict_many(extract_features_matrix(segments, pair))
        for pair, tree in zip(model.pairs, model.trees)
    ])
    return _vote(votes, model.classes)


def predict_dataset(model: SirecModel, dataset: LabeledDataset) -> np.ndarray:
    return predict_many(model, [r.rir for r in dataset.rows])


# ---------------------------------------------------------------------------
# serialization

def _node_to_json(node: Node) -> dict:
    if node.kind == "leaf":
        return {"kind": "leaf", "label": node.label}
    return {"kind": "split", "feature": node.feature, "threshold": node.threshold,
            "left": node.left, "right": node.right}


def serialize(model: SirecModel) -> bytes:
    """Versioned canonical JSON; byte-identical for identical models."""
    cfg = model.config
    doc = {
        "format_version": model.format_version,
        "config": {
            "n_estimators": cfg.n_estimators,
            "segment_length": cfg.segment_length,
            "min_len": cfg.bounds.min_len,
            "max_len": cfg.bounds.max_len,
            "random_state": cfg.random_state,
        },
        "classes": list(model.classes),
        "trees": [
            {"rnd_start": pair.rnd_start, "length": pair.length,
             "nodes": [_node_to_json(n) for n in tree.nodes]}
            for pair, tree in zip(model.pairs, model.trees)
        ],
    }
    return json.dumps(doc, separators=(",", ":")).encode("utf-8")


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise SchemaError(f"missing field '{key}' in {where}")
    return obj[key]


def _reject_unknown(obj: dict, allowed: set, where: str):
    extra = set(obj) - allowed
    if extra:
        raise SchemaError(f"unknown field '{sorted(extra)[0]}' in {where}")


def _node_from_json(obj: dict, i: int, n_nodes: int) -> Node:
    where = f"trees[].nodes[{i}]"
    kind = _require(obj, "kind", where)
    if kind == "leaf":
        _reject_unknown(obj, {"kind", "label"}, where)
        return Node(kind="leaf", label=int(_require(obj, "label", where)))
    if kind != "split":
        raise SchemaError(f"unknown node kind '{kind}' in {where}")
    _reject_unknown(obj, {"kind", "feature", "threshold", "left", "right"}, where)
    feature = int(_require(obj, "feature", where))
    left = int(_require(obj, "left", where))
    right = int(_require(obj, "right", where))
    if not (0 <= feature < N_FEATURES):
        raise SchemaError(f"feature index {feature} out of range in {where}")
    for child in (left, right):
        if not (0 <= child < n_nodes) or child == i:
            raise SchemaError(f"child index {child} invalid in {where}")
    return Node(kind="split", feature=feature,
                threshold=float(_require(obj, "threshold", where)),
                left=left, right=right)


def deserialize(data: bytes) -> SirecModel:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise SchemaError(f"model file is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaError("model file must contain a JSON object")
    _reject_unknown(doc, {"format_version", "config", "classes", "trees"}, "model")
    version = _require(doc, "format_version", "model")
    if version != MODEL_FORMAT_VERSION:
        raise SchemaError(
            f"unsupported format_version {version}, expected {MODEL_FORMAT_VERSION}"
        )
    cfg_obj = _require(doc, "config", "model")
    _reject_unknown(cfg_obj, {"n_estimators", "segment_length", "min_len",
                              "max_len", "random_state"}, "config")
    config = TrainConfig(
        n_estimators=int(_require(cfg_obj, "n_estimators", "config")),
        segment_length=int(_require(cfg_obj, "segment_length", "config")),
        bounds=IntervalBounds(int(_require(cfg_obj, "min_len", "config")),
                              int(_require(cfg_obj, "max_len", "config"))),
        random_state=int(_require(cfg_obj, "random_state", "config")),
    )
    classes = tuple(int(c) for c in _require(doc, "classes", "model"))
    if len(classes) == 0:
        raise SchemaError("classes list is empty")

    pairs, trees = [], []
    for t, tree_obj in enumerate(_require(doc, "trees", "model")):
        where = f"trees[{t}]"
        _reject_unknown(tree_obj, {"rnd_start", "length", "nodes"}, where)
        pair = IntervalPair(rnd_start=int(_require(tree_obj, "rnd_start", where)),
                            length=int(_require(tree_obj, "length", where)))
        node_objs = _require(tree_obj, "nodes", where)
        if not node_objs:
            raise SchemaError(f"empty node list in {where}")
        nodes = tuple(_node_from_json(n, i, len(node_objs))
                      for i, n in enumerate(node_objs))
        for n in nodes:
            if n.kind == "leaf" and n.label not in classes:
                raise SchemaError(f"leaf label {n.label} not in classes ({where})")
        pairs.append(pair)
        trees.append(DecisionTree(nodes=nodes))

    return SirecModel(config=config, classes=classes,
                      pairs=tuple(pairs), trees=tuple(trees))
