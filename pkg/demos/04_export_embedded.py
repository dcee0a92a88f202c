"""Export a trained model as a standalone C++ source unit.

Trains a small ensemble, serializes it to the versioned JSON model
format, emits the allocation-free classifier source, and (when g++ is
available) compiles it against the parity harness to confirm the device
path reproduces every in-process prediction.
"""

import shutil
import subprocess
import tempfile
from pathlib import Path

from sirec import io
from sirec.codegen import export_portable_source, parity_check
from sirec.ensemble import TrainConfig, fit, predict_dataset
from sirec.features import IntervalBounds
from sirec.synth import SceneConfig, generate_dataset

scene = SceneConfig()
train = generate_dataset(scene, rows_per_class_per_fine_fill=3, seed=1)
test = generate_dataset(scene, rows_per_class_per_fine_fill=1, seed=2)

config = TrainConfig(n_estimators=25, segment_length=300,
                     bounds=IntervalBounds(17, 153), random_state=0)
model = fit(train, config)

source = export_portable_source(model)
n_nodes = sum(len(t.nodes) for t in model.trees)
print(f"model: {len(model.trees)} trees, {n_nodes} nodes, "
      f"classes {list(model.classes)}")
print(f"emitted source: {len(source.splitlines())} lines, "
      f"entry point 'int sirec_predict(const float*)'")
print("\nfirst lines of the emitted unit:")
for line in source.splitlines()[:8]:
    print(f"  {line}")

if shutil.which("g++") is None:
    print("\ng++ not found; skipping the compile-and-verify step")
else:
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        (tmp / "model.cpp").write_text(source)
        io.write_model(model, str(tmp / "model.json"))
        io.write_dataset(test, str(tmp / "test.csv"))
        harness = Path(__file__).resolve().parent.parent / "embedded" / "parity.sh"
        subprocess.run([str(harness), str(tmp / "model.cpp"),
                        str(tmp / "test.csv"), str(tmp / "pred.csv")],
                       check=True, capture_output=True)
        device = [int(line.split(",")[1])
                  for line in (tmp / "pred.csv").read_text().splitlines()[1:]]
        agreement, mismatches, flagged = parity_check(model, test, device)
        primary = predict_dataset(model, test)
        print(f"\ncompiled runtime classified {len(device)} rows")
        print(f"agreement with in-process predictions: {100 * agreement:.1f}%")
        if flagged:
            print(f"rows within the float32 guard margin: {flagged}")
