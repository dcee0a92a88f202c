"""Repeated evaluation and hyperparameter search.

The ensemble is stochastic (random intervals per tree), so a single
train/test score is noisy. This demo refits several times with derived
seeds, prints the score distribution, and then runs a small random
search over the configuration space.
"""

from sirec.ensemble import TrainConfig
from sirec.evaluation import run_repeated_eval
from sirec.features import IntervalBounds
from sirec.search import SearchSpace, results_to_csv, stochastic_search
from sirec.synth import SceneConfig, generate_dataset

scene = SceneConfig()
train = generate_dataset(scene, rows_per_class_per_fine_fill=4, seed=1)
test = generate_dataset(scene, rows_per_class_per_fine_fill=2, seed=2)

# --- score distribution over refits ---------------------------------------
config = TrainConfig(n_estimators=40, segment_length=300,
                     bounds=IntervalBounds(17, 153), random_state=0)
report = run_repeated_eval(train, test, config, iterations=5, base_seed=0)
s = report.summary
print("macro-F1 over 5 refits:")
print(f"  mean {s['mean']:.3f}  median {s['median']:.3f}  "
      f"q1 {s['q1']:.3f}  q3 {s['q3']:.3f}  min {s['min']:.3f}  max {s['max']:.3f}")
print(f"  fit {report.fit_seconds:.1f} s, predict {report.predict_seconds:.1f} s")

# --- random search ---------------------------------------------------------
space = SearchSpace(segment_length=(100, 500), n_estimators=(10, 60),
                    max_len=(10, 200), min_len=(10, 100),
                    random_state=(0, 10_000))
results = stochastic_search(train, test, space, budget=6, meta_seed=7)
print("\nsearch results (best first):")
print(results_to_csv(results))
best = results[0].config
print(f"best: segment {best.segment_length}, {best.n_estimators} trees, "
      f"intervals {best.bounds.min_len}..{best.bounds.max_len} "
      f"-> F1 {results[0].f1:.3f}")
