"""Sound-based level sensing: sweep excitation, RIR estimation and a
random-interval decision-tree ensemble with portable model export."""

from .dsp import (
    SampledSignal,
    Spectrum,
    SweepConfig,
    WindowKind,
    apply_window,
    estimate_rir,
    forward_transform,
    generate_stepped_sweep,
    inverse_transform,
    spectral_subtract,
)
from .ensemble import (
    DatasetRow,
    DecisionTree,
    LabeledDataset,
    SirecModel,
    TrainConfig,
    deserialize,
    fit,
    predict,
    predict_many,
    serialize,
)
from .errors import ConfigError, EvaluationError, SchemaError, SirecError, TrainingError
from .evaluation import (
    EvalReport,
    classifier_adapter,
    confusion_matrix_normalized,
    f1_macro,
    run_repeated_eval,
)
from .features import (
    FeatureVector,
    IntervalBounds,
    IntervalPair,
    diff_mean,
    diff_std,
    extract_features,
    sample_interval_pair,
    spectral_min_max_ratio,
)
from .search import SearchResult, SearchSpace, stochastic_search
from .synth import SceneConfig, generate_dataset, make_class_ir, simulate_recording

__version__ = "0.1.0"
