import re
import shutil
import subprocess

import numpy as np
import pytest

from sirec.codegen import export_portable_source, parity_check
from sirec.ensemble import (
    DatasetRow,
    LabeledDataset,
    TrainConfig,
    fit,
    predict_dataset,
)
from sirec.errors import ConfigError
from sirec.features import IntervalBounds

HAVE_GXX = shutil.which("g++") is not None


def toy_dataset(n_per_class=8, length=40, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for k in range(3):
        for _ in range(n_per_class):
            r = rng.normal(scale=0.05, size=length)
            r[5 + 4 * k] += (k + 1) * 2.0
            rows.append(DatasetRow(rir=r, label=k * 25))
    return LabeledDataset(rows=tuple(rows))


def toy_model(n_estimators=15, seed=0):
    ds = toy_dataset(seed=seed)
    cfg = TrainConfig(n_estimators=n_estimators, segment_length=40,
                      bounds=IntervalBounds(5, 20), random_state=seed)
    return fit(ds, cfg), ds


class TestEmittedSource:
    def test_self_contained_and_allocation_free(self):
        model, _ = toy_model()
        src = export_portable_source(model)
        includes = re.findall(r"#include\s+<([^>]+)>", src)
        assert set(includes) <= {"math.h", "stdint.h"}
        for forbidden in ("malloc", "new ", "std::", "vector", "printf"):
            assert forbidden not in src

    def test_declared_sizes_match_model(self):
        model, _ = toy_model(n_estimators=7)
        src = export_portable_source(model)
        assert "#define SIREC_NUM_TREES 7" in src
        assert "#define SIREC_SEGMENT_LENGTH 40" in src
        assert "#define SIREC_NUM_CLASSES 3" in src
        n_nodes = sum(len(t.nodes) for t in model.trees)
        assert f"sirec_node_feature[{n_nodes}]" in src
        assert "int sirec_predict(const float" in src

    def test_emission_is_deterministic(self):
        model, _ = toy_model()
        assert export_portable_source(model) == export_portable_source(model)

    def test_thresholds_survive_float32_parse(self):
        # every literal in the threshold table must parse back to the
        # stored (already float32-quantized) threshold exactly
        model, _ = toy_model()
        src = export_portable_source(model)
        block = re.search(r"sirec_node_threshold\[\d+\] = \{([^}]*)\}", src).group(1)
        literals = [float(v[:-1]) for v in block.split(",")]  # strip 'f'
        stored = [n.threshold for t in model.trees for n in t.nodes
                  if n.kind == "split"]
        idx = 0
        for t in model.trees:
            for n in t.nodes:
                if n.kind == "split":
                    assert np.float32(literals[idx]) == np.float32(n.threshold)
                idx += 1
        assert len(stored) <= len(literals)


class TestParityCheck:
    def test_perfect_agreement(self):
        model, ds = toy_model()
        primary = predict_dataset(model, ds)
        agreement, mismatches, _ = parity_check(model, ds, primary)
        assert agreement == 1.0
        assert mismatches == []

    def test_detects_mismatch(self):
        model, ds = toy_model()
        device = predict_dataset(model, ds).copy()
        device[3] = 999
        agreement, mismatches, _ = parity_check(model, ds, device)
        assert mismatches == [3]
        assert agreement == pytest.approx(1.0 - 1.0 / len(ds))

    def test_rejects_wrong_count(self):
        model, ds = toy_model()
        with pytest.raises(ConfigError):
            parity_check(model, ds, [0, 0])

    def test_margin_flags_near_threshold_rows(self):
        model, ds = toy_model()
        primary = predict_dataset(model, ds)
        _, _, strict = parity_check(model, ds, primary, margin=1e-12)
        _, _, loose = parity_check(model, ds, primary, margin=1e6)
        assert len(loose) >= len(strict)
        assert len(loose) == len(ds)  # huge margin flags everything


_HARNESS = r"""
#include <stdio.h>
#include <stdlib.h>
extern int sirec_predict(const float *rir);
int main(int argc, char **argv) {
    static float row[SIREC_SEGMENT_LENGTH];
    FILE *f = fopen(argv[1], "r");
    if (!f) return 2;
    int n = atoi(argv[2]);
    for (int i = 0; i < n; i++) {
        for (int j = 0; j < SIREC_SEGMENT_LENGTH; j++) {
            double v;
            if (fscanf(f, "%lf", &v) != 1) return 3;
            row[j] = (float)v;
        }
        printf("%d\n", sirec_predict(row));
    }
    fclose(f);
    return 0;
}
"""


@pytest.mark.skipif(not HAVE_GXX, reason="g++ not available")
class TestCompiledParity:
    def compile_and_run(self, model, segments, tmp_path):
        src = tmp_path / "model.cpp"
        src.write_text(export_portable_source(model)
                       + _HARNESS.replace("SIREC_SEGMENT_LENGTH",
                                          str(model.config.segment_length)))
        binary = tmp_path / "runner"
        subprocess.run(["g++", "-O2", "-Wall", "-Werror", "-o", str(binary),
                        str(src)], check=True)
        data = tmp_path / "rows.txt"
        np.savetxt(data, np.asarray(segments, dtype=np.float32), fmt="%.9g")
        out = subprocess.run([str(binary), str(data), str(len(segments))],
                             check=True, capture_output=True, text=True)
        return [int(v) for v in out.stdout.split()]

    def test_compiles_cleanly_and_agrees(self, tmp_path):
        model, ds = toy_model(n_estimators=25)
        segments = [r.rir[:model.config.segment_length] for r in ds.rows]
        device = self.compile_and_run(model, segments, tmp_path)
        agreement, mismatches, flagged = parity_check(model, ds, device)
        assert [i for i in mismatches if i not in flagged] == []
        assert agreement == 1.0

    def test_agrees_on_scene_rows(self, tmp_path, small_train, small_test):
        config = TrainConfig(n_estimators=40, segment_length=300,
                             bounds=IntervalBounds(17, 153), random_state=0)
        model = fit(small_train, config)
        segments = [r.rir[:300] for r in small_test.rows]
        device = self.compile_and_run(model, segments, tmp_path)
        agreement, mismatches, flagged = parity_check(model, small_test, device)
        assert [i for i in mismatches if i not in flagged] == []
        assert agreement >= 0.99
