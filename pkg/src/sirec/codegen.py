"""Export of trained models to a portable, allocation-free C++ source unit.

The emitted file is self-contained (standard headers only): constant
arrays for interval pairs and flattened trees, float32 feature extraction
including a fixed-size iterative radix-2 transform, and a predict entry
point mirroring the in-process voting exactly. Thresholds are trained and
stored at float32 precision, so decisions agree bit-for-bit; the parity
checker still flags features that land within a guard margin of any
threshold on their decision path.
"""

from __future__ import annotations

import numpy as np

from .ensemble import LabeledDataset, SirecModel, predict_dataset
from .errors import ConfigError
from .features import _next_pow2, extract_features

_HEADER = """\
/* Auto-generated level-sensing classifier. Do not edit.
 * Self-contained: standard headers only, no heap allocation. */
#include <math.h>
#include <stdint.h>
"""


def _fmt_float(v: float) -> str:
    s = f"{np.float32(v):.9g}"
    if "." not in s and "e" not in s and "inf" not in s and "nan" not in s:
        s += ".0"  # "3f" is not a valid C++ literal
    return s + "f"


def _array(ctype: str, name: str, values, fmt=str) -> str:
    body = ",".join(fmt(v) for v in values)
    return f"static const {ctype} {name}[{len(list(values))}] = {{{body}}};\n"


def export_portable_source(model: SirecModel) -> str:
    """Emit the model plus its runtime as one C++ translation unit."""
    cfg = model.config
    classes = list(model.classes)
    class_index = {c: i for i, c in enumerate(classes)}

    starts, lengths, fft_lens, tree_offsets = [], [], [], [0]
    feature, threshold, left, right = [], [], [], []
    for pair, tree in zip(model.pairs, model.trees):
        starts.append(pair.rnd_start)
        lengths.append(pair.length)
        fft_lens.append(_next_pow2(pair.length))
        for node in tree.nodes:
            if node.kind == "leaf":
                feature.append(-1)
                threshold.append(0.0)
                left.append(class_index[node.label])
                right.append(0)
            else:
                feature.append(node.feature)
                threshold.append(node.threshold)
                left.append(node.left)
                right.append(node.right)
        tree_offsets.append(len(feature))

    max_fft = max(fft_lens)
    n_nodes = len(feature)
    if n_nodes >= 2**31:
        raise ConfigError("model too large to emit")
    if max(tree_offsets[i + 1] - tree_offsets[i]
           for i in range(len(model.trees))) > 2**16 - 1:
        raise ConfigError("a tree exceeds 16-bit node indexing")

    parts = [_HEADER]
    parts.append(f"#define SIREC_SEGMENT_LENGTH {cfg.segment_length}\n")
    parts.append(f"#define SIREC_NUM_TREES {cfg.n_estimators}\n")
    parts.append(f"#define SIREC_NUM_CLASSES {len(classes)}\n")
    parts.append(f"#define SIREC_MAX_FFT {max_fft}\n")
    parts.append("#define SIREC_PI 3.14159265358979f\n\n")
    parts.append(_array("int16_t", "sirec_class_labels", classes))
    parts.append(_array("uint16_t", "sirec_interval_start", starts))
    parts.append(_array("uint16_t", "sirec_interval_len", lengths))
    parts.append(_array("uint16_t", "sirec_fft_len", fft_lens))
    parts.append(_array("uint32_t", "sirec_tree_offset", tree_offsets))
    parts.append(_array("int16_t", "sirec_node_feature", feature))
    parts.append(_array("float", "sirec_node_threshold", threshold, _fmt_float))
    parts.append(_array("uint16_t", "sirec_node_left", left))
    parts.append(_array("uint16_t", "sirec_node_right", right))
    parts.append(_RUNTIME)
    return "".join(parts)


_RUNTIME = r"""
static float sirec_fft_re[SIREC_MAX_FFT];
static float sirec_fft_im[SIREC_MAX_FFT];

/* In-place iterative radix-2 transform over the static buffers. */
static void sirec_fft(uint16_t n) {
    uint16_t j = 0;
    for (uint16_t i = 1; i < n; i++) {
        uint16_t bit = (uint16_t)(n >> 1);
        for (; j & bit; bit = (uint16_t)(bit >> 1)) j = (uint16_t)(j ^ bit);
        j = (uint16_t)(j | bit);
        if (i < j) {
            float tr = sirec_fft_re[i]; sirec_fft_re[i] = sirec_fft_re[j]; sirec_fft_re[j] = tr;
            float ti = sirec_fft_im[i]; sirec_fft_im[i] = sirec_fft_im[j]; sirec_fft_im[j] = ti;
        }
    }
    for (uint16_t len = 2; len <= n; len = (uint16_t)(len << 1)) {
        float ang = -2.0f * SIREC_PI / (float)len;
        for (uint16_t base = 0; base < n; base = (uint16_t)(base + len)) {
            for (uint16_t k = 0; k < (len >> 1); k++) {
                float c = cosf(ang * (float)k);
                float s = sinf(ang * (float)k);
                uint16_t a = (uint16_t)(base + k);
                uint16_t b = (uint16_t)(a + (len >> 1));
                float xr = sirec_fft_re[b] * c - sirec_fft_im[b] * s;
                float xi = sirec_fft_re[b] * s + sirec_fft_im[b] * c;
                sirec_fft_re[b] = sirec_fft_re[a] - xr;
                sirec_fft_im[b] = sirec_fft_im[a] - xi;
                sirec_fft_re[a] += xr;
                sirec_fft_im[a] += xi;
            }
        }
    }
}

/* Min/max ratio of one-sided magnitude bins [1, n/2], DC excluded. */
static float sirec_spectral_ratio(const float *seg, uint16_t len, uint16_t fft_len) {
    for (uint16_t i = 0; i < fft_len; i++) {
        sirec_fft_re[i] = (i < len) ? seg[i] : 0.0f;
        sirec_fft_im[i] = 0.0f;
    }
    sirec_fft(fft_len);
    float lo = 0.0f, hi = 0.0f;
    for (uint16_t k = 1; k <= (fft_len >> 1); k++) {
        float mag = sqrtf(sirec_fft_re[k] * sirec_fft_re[k] +
                          sirec_fft_im[k] * sirec_fft_im[k]);
        if (k == 1 || mag < lo) lo = mag;
        if (k == 1 || mag > hi) hi = mag;
    }
    if (hi == 0.0f) return 0.0f;
    return lo / hi;
}

/* Mean and standard deviation of adjacent differences, divisor len-1. */
static void sirec_diff_stats(const float *seg, uint16_t len,
                             float *mean, float *sd) {
    float sum = 0.0f;
    for (uint16_t k = 0; k + 1 < len; k++) sum += seg[k] - seg[k + 1];
    float mu = sum / (float)(len - 1);
    float acc = 0.0f;
    for (uint16_t k = 0; k + 1 < len; k++) {
        float d = seg[k] - seg[k + 1] - mu;
        acc += d * d;
    }
    *mean = mu;
    *sd = sqrtf(acc / (float)(len - 1));
}

static int sirec_tree_class(uint32_t tree, const float *features) {
    uint32_t base = sirec_tree_offset[tree];
    uint16_t node = 0;
    for (;;) {
        uint32_t i = base + node;
        int16_t f = sirec_node_feature[i];
        if (f < 0) return (int)sirec_node_left[i];
        node = (features[f] <= sirec_node_threshold[i])
                   ? sirec_node_left[i] : sirec_node_right[i];
    }
}

/* Plurality vote over all trees; ties go to the smallest class label. */
int sirec_predict(const float *rir) {
    int16_t votes[SIREC_NUM_CLASSES];
    for (int c = 0; c < SIREC_NUM_CLASSES; c++) votes[c] = 0;
    for (uint32_t t = 0; t < SIREC_NUM_TREES; t++) {
        float features[3];
        const float *rnd = rir + sirec_interval_start[t];
        features[0] = sirec_spectral_ratio(rnd, sirec_interval_len[t], sirec_fft_len[t]);
        sirec_diff_stats(rir, sirec_interval_len[t], &features[1], &features[2]);
        votes[sirec_tree_class(t, features)]++;
    }
    int best = 0;
    for (int c = 1; c < SIREC_NUM_CLASSES; c++) {
        if (votes[c] > votes[best]) best = c;
    }
    return (int)sirec_class_labels[best];
}
"""


def parity_check(model: SirecModel, dataset: LabeledDataset,
                 device_labels, margin: float = 1e-6):
    """Compare device predictions against the in-process path.

    Returns (agreement_fraction, mismatched_row_indices, flagged_row_indices)
    where flagged rows had some decision-path feature within ``margin`` of
    its split threshold: the only situations in which the float32 device
    features could legitimately fall on the other side.
    """
    device_labels = np.asarray(device_labels, dtype=int)
    if device_labels.size != len(dataset):
        raise ConfigError(
            f"{device_labels.size} device predictions for {len(dataset)} rows"
        )
    primary = predict_dataset(model, dataset)
    mismatches = [i for i in range(len(dataset)) if primary[i] != device_labels[i]]

    cfg = model.config
    flagged = []
    for i, row in enumerate(dataset.rows):
        seg = row.rir[cfg.segment_offset:cfg.segment_offset + cfg.segment_length]
        close = False
        for pair, tree in zip(model.pairs, model.trees):
            feats = extract_features(seg, pair).as_array()
            node = tree.nodes[0]
            while node.kind == "split":
                if abs(feats[node.feature] - node.threshold) < margin:
                    close = True
                node = tree.nodes[node.left if feats[node.feature] <= node.threshold
                                  else node.right]
            if close:
                break
        if close:
            flagged.append(i)
    agreement = 1.0 - len(mismatches) / max(1, len(dataset))
    return agreement, mismatches, flagged
