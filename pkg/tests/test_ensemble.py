import numpy as np
import pytest
from numpy.testing import assert_array_equal

from sirec.ensemble import (
    DatasetRow,
    DecisionTree,
    LabeledDataset,
    Node,
    SirecModel,
    TrainConfig,
    _best_split,
    _grow_tree,
    derive_tree_seed_sequence,
    deserialize,
    fit,
    predict,
    predict_dataset,
    predict_many,
    serialize,
)
from sirec.errors import ConfigError, SchemaError, TrainingError
from sirec.features import IntervalBounds, IntervalPair


# brute-force split oracle: literal enumeration of every candidate

def oracle_best_split(X, y, min_samples_leaf=1):
    n = len(y)
    best = None  # (gini, feature, threshold)
    for f in range(X.shape[1]):
        vals = sorted(set(float(np.float32((a + b) / 2.0))
                          for a, b in zip(sorted(X[:, f])[:-1], sorted(X[:, f])[1:])
                          if a < b))
        for t in vals:
            left = [i for i in range(n) if X[i, f] <= t]
            right = [i for i in range(n) if X[i, f] > t]
            if len(left) < min_samples_leaf or len(right) < min_samples_leaf:
                continue
            if not left or not right:
                continue

            def gini(rows):
                if not rows:
                    return 0.0
                labels = [y[i] for i in rows]
                return 1.0 - sum((labels.count(c) / len(rows)) ** 2
                                 for c in set(labels))

            w = (len(left) * gini(left) + len(right) * gini(right)) / n
            cand = (w, f, t)
            if best is None or cand[0] < best[0] - 1e-15:
                best = cand
    return best


def tiny_config(**kw):
    kw.setdefault("n_estimators", 5)
    kw.setdefault("segment_length", 40)
    kw.setdefault("bounds", IntervalBounds(5, 20))
    kw.setdefault("random_state", 0)
    return TrainConfig(**kw)


class TestBestSplit:
    def test_hand_evaluated_clean_split(self):
        # single useful feature; midpoint of 2 and 3 is 2.5
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        y = np.array([0, 0, 1, 1])
        g, f, t, n_left = _best_split(X, y, 2, 1)
        assert f == 0
        assert t == pytest.approx(2.5)
        assert g == pytest.approx(0.0)
        assert n_left == 2

    def test_hand_evaluated_impure_split(self):
        # best cut isolates the left pair: weighted gini
        # = (2*0 + 4*(1 - (1/4)^2 - (3/4)^2)) / 6 = 0.25
        X = np.array([[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]])
        y = np.array([0, 0, 0, 1, 1, 1])
        g, f, t, _ = _best_split(X, y, 2, 1)
        assert t == pytest.approx(2.5)
        assert g == pytest.approx(0.0)
        y2 = np.array([0, 0, 1, 1, 1, 0])
        g2, _, t2, _ = _best_split(X, y2, 2, 1)
        assert t2 == pytest.approx(1.5)
        assert g2 == pytest.approx(0.25)

    def test_feature_tie_goes_to_lowest(self):
        # feature 1 mirrors feature 0 exactly, so both achieve the same gini
        X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
        y = np.array([0, 0, 1, 1])
        _, f, _, _ = _best_split(X, y, 2, 1)
        assert f == 0

    def test_threshold_tie_goes_to_lowest(self):
        # both cuts give gini 0.25; the lower midpoint must win
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([0, 1, 0, 1])
        _, _, t, _ = _best_split(X, y, 2, 1)
        assert t == pytest.approx(0.5)

    def test_no_candidate_when_constant(self):
        X = np.ones((5, 3))
        y = np.array([0, 1, 0, 1, 0])
        assert _best_split(X, y, 2, 1) is None

    def test_min_samples_leaf_filters(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        y = np.array([0, 1, 1, 1])
        g, _, t, _ = _best_split(X, y, 2, 2)
        assert t == pytest.approx(2.5)  # the pure 1.5 cut leaves one row
        assert _best_split(X, y, 2, 3) is None

    def test_threshold_is_float32_exact(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(30, 3))
        y = rng.integers(0, 3, size=30)
        res = _best_split(X, y, 3, 1)
        assert res is not None
        assert res[2] == float(np.float32(res[2]))

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(1)
        for trial in range(40):
            n = int(rng.integers(4, 25))
            X = np.round(rng.normal(size=(n, 3)), 2)
            y = rng.integers(0, 3, size=n)
            if len(set(y.tolist())) < 2:
                continue
            msl = int(rng.integers(1, 3))
            got = _best_split(X, np.asarray(y), 3, msl)
            ref = oracle_best_split(X, y, msl)
            if ref is None:
                assert got is None
                continue
            assert got is not None
            assert got[0] == pytest.approx(ref[0], abs=1e-12)
            assert got[1] == ref[1]
            assert got[2] == pytest.approx(ref[2], abs=1e-12)


class TestGrowTree:
    def test_pure_input_is_single_leaf(self):
        X = np.zeros((4, 3))
        tree = _grow_tree(X, np.array([2, 2, 2, 2]), np.array([2]), None, 1)
        assert len(tree.nodes) == 1
        assert tree.nodes[0].kind == "leaf"
        assert tree.nodes[0].label == 2

    def test_grows_to_purity(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(40, 3))
        y = rng.integers(0, 4, size=40)
        tree = _grow_tree(X, y, np.arange(4), None, 1)
        pred = [tree.predict_one(X[i]) for i in range(40)]
        assert list(pred) == list(y)

    def test_max_depth_one_is_a_stump(self):
        X = np.array([[1.0, 0, 0], [2.0, 0, 0], [3.0, 0, 0], [4.0, 0, 0]])
        y = np.array([0, 0, 1, 1])
        tree = _grow_tree(X, y, np.array([0, 1]), 1, 1)
        kinds = [n.kind for n in tree.nodes]
        assert kinds.count("split") == 1
        assert kinds.count("leaf") == 2

    def test_indistinguishable_rows_majority_leaf(self):
        # identical rows with mixed labels cannot be split; majority wins,
        # ties to the smallest label
        X = np.ones((4, 3))
        tree = _grow_tree(X, np.array([5, 3, 5, 3]), np.array([3, 5]), None, 1)
        assert len(tree.nodes) == 1
        assert tree.nodes[0].label == 3

    def test_predict_many_matches_predict_one(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(60, 3))
        y = rng.integers(0, 3, size=60)
        tree = _grow_tree(X, y, np.arange(3), None, 1)
        Q = rng.normal(size=(25, 3))
        ones = [tree.predict_one(Q[i]) for i in range(25)]
        assert_array_equal(tree.predict_many(Q), ones)


def synthetic_rows(rng, n_per_class, length=40):
    """Separable toy rows: class k gets a bump of height k+1."""
    rows = []
    for k in range(3):
        for _ in range(n_per_class):
            r = rng.normal(scale=0.05, size=length)
            r[5 + 4 * k] += (k + 1) * 2.0
            rows.append(DatasetRow(rir=r, label=k * 25))
    return LabeledDataset(rows=tuple(rows))


class TestFit:
    def test_training_recovers_separable_classes(self):
        ds = synthetic_rows(np.random.default_rng(4), 8)
        model = fit(ds, tiny_config(n_estimators=21))
        pred = predict_dataset(model, ds)
        assert np.mean(pred == ds.labels()) == 1.0

    def test_model_shape(self):
        ds = synthetic_rows(np.random.default_rng(5), 4)
        cfg = tiny_config(n_estimators=7)
        model = fit(ds, cfg)
        assert len(model.trees) == 7
        assert len(model.pairs) == 7
        assert model.classes == (0, 25, 50)
        for p in model.pairs:
            assert p.fits(cfg.segment_length)

    def test_bit_determinism(self):
        ds = synthetic_rows(np.random.default_rng(6), 5)
        cfg = tiny_config(n_estimators=9, random_state=123)
        assert serialize(fit(ds, cfg)) == serialize(fit(ds, cfg))

    def test_per_tree_seeds_are_prefix_stable(self):
        # tree i depends only on (random_state, i), so a larger ensemble
        # shares its prefix with a smaller one
        ds = synthetic_rows(np.random.default_rng(7), 4)
        small = fit(ds, tiny_config(n_estimators=3, random_state=11))
        big = fit(ds, tiny_config(n_estimators=6, random_state=11))
        assert big.pairs[:3] == small.pairs
        assert big.trees[:3] == small.trees

    def test_seed_changes_model(self):
        ds = synthetic_rows(np.random.default_rng(8), 4)
        a = fit(ds, tiny_config(random_state=1))
        b = fit(ds, tiny_config(random_state=2))
        assert serialize(a) != serialize(b)

    def test_seed_sequences_distinct(self):
        keys = {derive_tree_seed_sequence(5, i).generate_state(4).tobytes()
                for i in range(100)}
        assert len(keys) == 100

    def test_bootstrap_is_deterministic(self):
        ds = synthetic_rows(np.random.default_rng(9), 5)
        cfg = tiny_config(bootstrap=True, random_state=3)
        assert serialize(fit(ds, cfg)) == serialize(fit(ds, cfg))

    def test_empty_dataset(self):
        with pytest.raises(TrainingError):
            fit(LabeledDataset(rows=()), tiny_config())

    def test_single_class(self):
        rows = tuple(DatasetRow(rir=np.zeros(40), label=1) for _ in range(4))
        with pytest.raises(TrainingError):
            fit(LabeledDataset(rows=rows), tiny_config())

    def test_rows_shorter_than_segment(self):
        rows = (DatasetRow(rir=np.zeros(10), label=0),
                DatasetRow(rir=np.zeros(10), label=1))
        with pytest.raises(TrainingError):
            fit(LabeledDataset(rows=rows), tiny_config())

    def test_invalid_configs(self):
        with pytest.raises(ConfigError):
            tiny_config(n_estimators=0)
        with pytest.raises(ConfigError):
            tiny_config(bounds=IntervalBounds(1, 20))
        with pytest.raises(ConfigError):
            tiny_config(bounds=IntervalBounds(20, 50))
        with pytest.raises(ConfigError):
            tiny_config(min_samples_leaf=0)
        with pytest.raises(ConfigError):
            tiny_config(max_depth=0)


def manual_model(labels_per_tree, classes=(0, 25)):
    """Ensemble of constant stumps, one forced label per tree."""
    n = len(labels_per_tree)
    cfg = TrainConfig(n_estimators=n, segment_length=10,
                      bounds=IntervalBounds(2, 5), random_state=0)
    trees = tuple(DecisionTree(nodes=(Node(kind="leaf", label=lab),))
                  for lab in labels_per_tree)
    pairs = tuple(IntervalPair(rnd_start=0, length=3) for _ in range(n))
    return SirecModel(config=cfg, classes=tuple(classes), pairs=pairs, trees=trees)


class TestVoting:
    def test_plurality(self):
        model = manual_model([25, 25, 0])
        assert predict(model, np.zeros(10)) == 25

    def test_tie_goes_to_smallest_label(self):
        model = manual_model([25, 0], classes=(0, 25))
        assert predict(model, np.zeros(10)) == 0
        model = manual_model([50, 25, 50, 25], classes=(25, 50))
        assert predict(model, np.zeros(10)) == 25

    def test_predict_many_matches_predict(self):
        ds = synthetic_rows(np.random.default_rng(10), 4)
        model = fit(ds, tiny_config(n_estimators=10))
        many = predict_many(model, [r.rir for r in ds.rows])
        ones = [predict(model, r.rir) for r in ds.rows]
        assert_array_equal(many, ones)

    def test_short_input_rejected(self):
        model = manual_model([0, 25])
        with pytest.raises(ConfigError):
            predict(model, np.zeros(5))
        with pytest.raises(ConfigError):
            predict_many(model, [np.zeros(10), np.zeros(9)])


class TestSerialization:
    def make_model(self):
        ds = synthetic_rows(np.random.default_rng(11), 5)
        return fit(ds, tiny_config(n_estimators=6, random_state=77))

    def test_roundtrip_is_identity(self):
        model = self.make_model()
        data = serialize(model)
        again = deserialize(data)
        assert serialize(again) == data
        assert again.pairs == model.pairs
        assert again.trees == model.trees
        assert again.classes == model.classes

    def test_roundtrip_preserves_predictions(self):
        ds = synthetic_rows(np.random.default_rng(12), 4)
        model = fit(ds, tiny_config(n_estimators=8))
        again = deserialize(serialize(model))
        assert_array_equal(predict_dataset(again, ds), predict_dataset(model, ds))

    def test_canonical_bytes(self):
        model = self.make_model()
        data = serialize(model)
        assert b" " not in data
        assert data == serialize(model)

    def test_rejects_bad_version(self):
        doc = serialize(self.make_model()).replace(
            b'"format_version":1', b'"format_version":9')
        with pytest.raises(SchemaError, match="format_version"):
            deserialize(doc)

    def test_rejects_garbage(self):
        with pytest.raises(SchemaError):
            deserialize(b"not json")
        with pytest.raises(SchemaError):
            deserialize(b"[1,2,3]")

    def test_rejects_unknown_field(self):
        data = serialize(self.make_model())
        patched = data[:-1] + b',"extra":1}'
        with pytest.raises(SchemaError, match="unknown field"):
            deserialize(patched)

    def test_rejects_missing_field(self):
        import json
        doc = json.loads(serialize(self.make_model()))
        del doc["classes"]
        with pytest.raises(SchemaError, match="classes"):
            deserialize(json.dumps(doc).encode())

    def test_rejects_bad_child_index(self):
        import json
        doc = json.loads(serialize(self.make_model()))
        for node in doc["trees"][0]["nodes"]:
            if node["kind"] == "split":
                node["left"] = 9999
                break
        with pytest.raises(SchemaError, match="child index"):
            deserialize(json.dumps(doc).encode())

    def test_rejects_foreign_leaf_label(self):
        import json
        doc = json.loads(serialize(self.make_model()))
        for node in doc["trees"][0]["nodes"]:
            if node["kind"] == "leaf":
                node["label"] = 999
                break
        with pytest.raises(SchemaError, match="label"):
            deserialize(json.dumps(doc).encode())
