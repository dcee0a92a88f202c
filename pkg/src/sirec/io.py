"""File formats: dataset CSV, signal CSV/WAV, JSON configs, NDJSON ingest.

The dataset file is the canonical interchange format: a magic+version
header line declaring sample rate, row length, segment semantics and the
class set, followed by one CSV row per RIR. Floats are written with 9
significant digits. All readers reject unknown major versions and report
schema problems with the offending line/column.
"""

from __future__ import annotations

import json
import os
import tempfile
import wave
from dataclasses import fields

import numpy as np

from .dsp import SampledSignal, SweepConfig
from .ensemble import DatasetRow, LabeledDataset, TrainConfig, deserialize, serialize
from .errors import SchemaError
from .features import IntervalBounds
from .search import SearchSpace
from .synth import SceneConfig

DATASET_MAGIC = "sirec-dataset"
DATASET_MAJOR_VERSION = 1
_FLOAT_FMT = "%.9g"


# ---------------------------------------------------------------------------
# dataset CSV

def _format_header(ds: LabeledDataset, n_samples: int, segment_semantics: str) -> str:
    classes = ";".join(str(c) for c in ds.classes)
    return (f"{DATASET_MAGIC},{DATASET_MAJOR_VERSION},"
            f"{_FLOAT_FMT % ds.sample_rate_hz},{n_samples},{segment_semantics},{classes}")


def dataset_to_text(ds: LabeledDataset, segment_semantics: str = "head") -> str:
    if len(ds) == 0:
        raise SchemaError("refusing to write an empty dataset")
    n_samples = ds.rows[0].rir.size
    for i, row in enumerate(ds.rows):
        if row.rir.size != n_samples:
            raise SchemaError(f"row {i} has {row.rir.size} samples, expected {n_samples}")
    lines = [_format_header(ds, n_samples, segment_semantics),
             "label,fine_fill_percent,material,samples..."]
    for row in ds.rows:
        vals = ",".join(_FLOAT_FMT % v for v in row.rir)
        lines.append(f"{row.label},{_FLOAT_FMT % row.fine_fill_percent},{row.material},{vals}")
    return "\n".join(lines) + "\n"


def write_dataset(ds: LabeledDataset, path: str, segment_semantics: str = "head") -> None:
    _atomic_write_text(path, dataset_to_text(ds, segment_semantics))


def dataset_from_text(text: str) -> LabeledDataset:
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise SchemaError("line 1: empty file, expected dataset header")
    head = lines[0].split(",")
    if head[0] != DATASET_MAGIC:
        raise SchemaError(f"line 1, column 1: expected magic '{DATASET_MAGIC}', got '{head[0]}'")
    if len(head) != 6:
        raise SchemaError(f"line 1: expected 6 header fields, got {len(head)}")
    try:
        version = int(head[1])
    except ValueError:
        raise SchemaError(f"line 1, column 2: version '{head[1]}' is not an integer")
    if version != DATASET_MAJOR_VERSION:
        raise SchemaError(f"line 1: unsupported major version {version}")
    try:
        sample_rate_hz = float(head[2])
        n_samples = int(head[3])
    except ValueError as e:
        raise SchemaError(f"line 1: bad header value: {e}")
    try:
        class_set = {int(c) for c in head[5].split(";")}
    except ValueError:
        raise SchemaError(f"line 1, column 6: bad class list '{head[5]}'")

    if len(lines) < 2 or not lines[1].startswith("label,"):
        raise SchemaError("line 2: expected column header starting with 'label,'")

    rows = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3 + n_samples:
            raise SchemaError(
                f"line {lineno}: expected {3 + n_samples} fields, got {len(parts)}"
            )
        try:
            label = int(parts[0])
        except ValueError:
            raise SchemaError(f"line {lineno}, column 1: bad label '{parts[0]}'")
        if label not in class_set:
            raise SchemaError(
                f"line {lineno}, column 1: label {label} not in declared classes"
            )
        try:
            fine = float(parts[1])
            samples = np.array([float(v) for v in parts[3:]])
        except ValueError as e:
            raise SchemaError(f"line {lineno}: bad float value: {e}")
        rows.append(DatasetRow(rir=samples, label=label, fine_fill_percent=fine,
                               material=parts[2]))
    if not rows:
        raise SchemaError("dataset contains no rows")
    return LabeledDataset(rows=tuple(rows), sample_rate_hz=sample_rate_hz)


def read_dataset(path: str) -> LabeledDataset:
    with open(path, "r", encoding="utf-8") as f:
        return dataset_from_text(f.read())


# ---------------------------------------------------------------------------
# signals

def write_signal_csv(signal: SampledSignal, path: str) -> None:
    lines = [f"sample_rate_hz,{_FLOAT_FMT % signal.sample_rate_hz}"]
    lines += [_FLOAT_FMT % v for v in signal.samples]
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_signal_csv(path: str) -> SampledSignal:
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln for ln in f.read().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("sample_rate_hz,"):
        raise SchemaError("line 1: expected 'sample_rate_hz,<value>' header")
    try:
        rate = float(lines[0].split(",", 1)[1])
        samples = np.array([float(v) for v in lines[1:]])
    except ValueError as e:
        raise SchemaError(f"bad float value: {e}")
    if samples.size == 0:
        raise SchemaError("signal file contains no samples")
    return SampledSignal(samples, rate)


def write_signal_wav(signal: SampledSignal, path: str) -> None:
    """PCM16 mono at the signal's rate; samples clipped to [-1, 1]."""
    pcm = np.clip(signal.samples, -1.0, 1.0)
    pcm = (pcm * 32767.0).astype("<i2")
    with wave.open(path, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(round(signal.sample_rate_hz)))
        w.writeframes(pcm.tobytes())


# ---------------------------------------------------------------------------
# model files

def write_model(model, path: str) -> None:
    data = serialize(model)
    _atomic_write_bytes(path, data)


def read_model(path: str):
    with open(path, "rb") as f:
        return deserialize(f.read())


# ---------------------------------------------------------------------------
# JSON configs

def _load_json_object(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON: {e}")
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    return doc


def _check_keys(doc: dict, allowed: set, path: str):
    extra = set(doc) - allowed
    if extra:
        raise SchemaError(f"{path}: unknown field '{sorted(extra)[0]}'")


def load_sweep_config(path: str) -> SweepConfig:
    doc = _load_json_object(path)
    allowed = {f.name for f in fields(SweepConfig)}
    _check_keys(doc, allowed, path)
    return SweepConfig(**doc)


def load_train_config(path: str) -> TrainConfig:
    doc = _load_json_object(path)
    allowed = {"n_estimators", "segment_length", "min_len", "max_len", "random_state",
               "max_depth", "min_samples_leaf", "bootstrap", "segment_offset"}
    _check_keys(doc, allowed, path)
    for key in ("n_estimators", "segment_length", "min_len", "max_len", "random_state"):
        if key not in doc:
            raise SchemaError(f"{path}: missing field '{key}'")
    return TrainConfig(
        n_estimators=int(doc["n_estimators"]),
        segment_length=int(doc["segment_length"]),
        bounds=IntervalBounds(int(doc["min_len"]), int(doc["max_len"])),
        random_state=int(doc["random_state"]),
        max_depth=doc.get("max_depth"),
        min_samples_leaf=int(doc.get("min_samples_leaf", 1)),
        bootstrap=bool(doc.get("bootstrap", False)),
        segment_offset=int(doc.get("segment_offset", 0)),
    )


def load_scene_config(path: str) -> SceneConfig:
    doc = _load_json_object(path)
    allowed = {f.name for f in fields(SceneConfig)}
    _check_keys(doc, allowed, path)
    kwargs = dict(doc)
    if "sweep" in kwargs:
        sweep = kwargs["sweep"]
        _check_keys(sweep, {f.name for f in fields(SweepConfig)}, path)
        kwargs["sweep"] = SweepConfig(**sweep)
    if "buckets" in kwargs:
        kwargs["buckets"] = {int(k): tuple(v) for k, v in kwargs["buckets"].items()}
    if "materials" in kwargs:
        kwargs["materials"] = {str(k): float(v) for k, v in kwargs["materials"].items()}
    if kwargs.get("snr_db") == "inf":
        kwargs["snr_db"] = float("inf")
    return SceneConfig(**kwargs)


def load_search_space(path: str) -> SearchSpace:
    doc = _load_json_object(path)
    allowed = {f.name for f in fields(SearchSpace)}
    _check_keys(doc, allowed, path)
    return SearchSpace(**{k: tuple(v) for k, v in doc.items()})


# ---------------------------------------------------------------------------
# NDJSON ingestion (stand-in for the MQTT transport)

INGEST_FIELDS = {"topic", "device_id", "timestamp", "label", "fine_fill_percent",
                 "material", "samples"}


def parse_ingest_message(line: str, lineno: int) -> DatasetRow:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as e:
        raise SchemaError(f"message {lineno}: invalid JSON: {e}")
    if not isinstance(doc, dict):
        raise SchemaError(f"message {lineno}: expected a JSON object")
    _check_keys(doc, INGEST_FIELDS, f"message {lineno}")
    if "samples" not in doc:
        raise SchemaError(f"message {lineno}: missing field 'samples'")
    if "label" not in doc:
        raise SchemaError(f"message {lineno}: missing field 'label' (unlabeled "
                          "messages cannot be appended to a labeled dataset)")
    samples = np.asarray(doc["samples"], dtype=float)
    if samples.ndim != 1 or samples.size == 0:
        raise SchemaError(f"message {lineno}: 'samples' must be a non-empty array")
    return DatasetRow(rir=samples, label=int(doc["label"]),
                      fine_fill_percent=float(doc.get("fine_fill_percent", 0.0)),
                      material=str(doc.get("material", "")))


def ingest_stream(lines, out_path: str, sample_rate_hz: float = 10_000.0) -> int:
    """Append NDJSON messages to a dataset file, creating it if missing.

    The whole file is rewritten via write-temp-then-rename so a partial
    append never corrupts it. Returns the number of rows added.
    """
    new_rows = [parse_ingest_message(ln, i + 1)
                for i, ln in enumerate(lines) if ln.strip()]
    if not new_rows:
        raise SchemaError("no messages to ingest")
    if os.path.exists(out_path):
        existing = read_dataset(out_path)
        n = existing.rows[0].rir.size
        for i, r in enumerate(new_rows):
            if r.rir.size != n:
                raise SchemaError(
                    f"message {i + 1}: payload has {r.rir.size} samples, "
                    f"dataset rows have {n}"
                )
        ds = LabeledDataset(rows=existing.rows + tuple(new_rows),
                            sample_rate_hz=existing.sample_rate_hz)
    else:
        ds = LabeledDataset(rows=tuple(new_rows), sample_rate_hz=sample_rate_hz)
    write_dataset(ds, out_path)
    return len(new_rows)


# ---------------------------------------------------------------------------
# atomic writes

def _atomic_write_text(path: str, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


def _atomic_write_bytes(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-sirec-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
