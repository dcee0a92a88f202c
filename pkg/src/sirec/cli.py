"""Command-line surface. Every subcommand is a thin shell over the library."""

from __future__ import annotations

import argparse
import sys

from . import codegen, ensemble, io, search as search_mod
from .dsp import SweepConfig, estimate_rir, generate_stepped_sweep, spectral_subtract
from .ensemble import TrainConfig
from .errors import SirecError
from .evaluation import evaluate_model, f1_macro
from .synth import SceneConfig, generate_dataset

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sirec",
                                description="Sound-based level sensing toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sweep-gen", help="write the stepped sweep excitation")
    sp.add_argument("--config", help="SweepConfig JSON (defaults used if omitted)")
    sp.add_argument("--out", required=True)
    sp.add_argument("--format", choices=["csv", "wav"], default="csv")

    sp = sub.add_parser("rir", help="recording -> spectral subtraction -> RIR")
    sp.add_argument("--recording", required=True, help="signal CSV")
    sp.add_argument("--config", help="SweepConfig JSON")
    sp.add_argument("--alpha", type=float, default=1.0)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("synth", help="generate synthetic train/test datasets")
    sp.add_argument("--config", help="SceneConfig JSON")
    sp.add_argument("--seed", type=int, default=7)
    sp.add_argument("--train-rows", type=int, default=20,
                    help="rows per (class, fine fill, material) in the train set")
    sp.add_argument("--test-rows", type=int, default=10)
    sp.add_argument("--train-out", required=True)
    sp.add_argument("--test-out", required=True)

    sp = sub.add_parser("train", help="fit a model on a dataset")
    sp.add_argument("--config", required=True, help="TrainConfig JSON")
    sp.add_argument("--data", required=True, help="training dataset CSV")
    sp.add_argument("--out", required=True, help="model JSON path")

    sp = sub.add_parser("eval", help="score a trained model on a dataset")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--out", help="report output path (stdout if omitted)")
    sp.add_argument("--format", choices=["json", "csv"], default="json")

    sp = sub.add_parser("search", help="stochastic hyperparameter search")
    sp.add_argument("--config", help="SearchSpace JSON (defaults if omitted)")
    sp.add_argument("--train", required=True)
    sp.add_argument("--test", required=True)
    sp.add_argument("--budget", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True, help="ranked results CSV")

    sp = sub.add_parser("codegen", help="emit the embedded classifier source")
    sp.add_argument("--model", required=True)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("ingest", help="append NDJSON messages to a dataset")
    sp.add_argument("--from", dest="source", required=True,
                    help="NDJSON file, or '-' for stdin")
    sp.add_argument("--out", required=True, help="dataset CSV to append to")
    sp.add_argument("--sample-rate", type=float, default=10_000.0,
                    help="sample rate recorded when creating a new dataset")
    return p


def _cmd_sweep_gen(args) -> int:
    cfg = io.load_sweep_config(args.config) if args.config else SweepConfig()
    sweep = generate_stepped_sweep(cfg)
    if args.format == "wav":
        io.write_signal_wav(sweep, args.out)
    else:
        io.write_signal_csv(sweep, args.out)
    print(f"wrote {len(sweep)} samples to {args.out}")
    return EXIT_OK


def _cmd_rir(args) -> int:
    cfg = io.load_sweep_config(args.config) if args.config else SweepConfig()
    recording = io.read_signal_csv(args.recording)
    denoised = spectral_subtract(recording, cfg, alpha=args.alpha)
    reference = generate_stepped_sweep(cfg)
    rir = estimate_rir(denoised, reference)
    io.write_signal_csv(rir, args.out)
    print(f"wrote RIR ({len(rir)} samples) to {args.out}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    cfg = io.load_scene_config(args.config) if args.config else SceneConfig()
    train = generate_dataset(cfg, args.train_rows, seed=args.seed)
    test = generate_dataset(cfg, args.test_rows, seed=args.seed + 1)
    io.write_dataset(train, args.train_out)
    io.write_dataset(test, args.test_out)
    print(f"wrote {len(train)} train rows to {args.train_out}, "
          f"{len(test)} test rows to {args.test_out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    config = io.load_train_config(args.config)
    dataset = io.read_dataset(args.data)
    model = ensemble.fit(dataset, config)
    io.write_model(model, args.out)
    train_f1 = f1_macro(dataset.labels(), ensemble.predict_dataset(model, dataset))
    print(f"training F1: {train_f1:.4f}")
    print(f"wrote model to {args.out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    model = io.read_model(args.model)
    dataset = io.read_dataset(args.data)
    report = evaluate_model(model, dataset)
    out_text = report.to_json() if args.format == "json" else report.scores_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(out_text)
        print(f"macro-F1: {report.scores[0]:.4f}")
        print(f"wrote report to {args.out}")
    else:
        print(out_text)
    return EXIT_OK


def _cmd_search(args) -> int:
    space = io.load_search_space(args.config) if args.config else search_mod.SearchSpace()
    train = io.read_dataset(args.train)
    test = io.read_dataset(args.test)
    results = search_mod.stochastic_search(train, test, space,
                                           budget=args.budget, meta_seed=args.seed)
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(search_mod.results_to_csv(results))
    best = results[0]
    print(f"best F1 {best.f1:.4f} at segment_length={best.config.segment_length}, "
          f"n_estimators={best.config.n_estimators}")
    print(f"wrote {len(results)} results to {args.out}")
    return EXIT_OK


def _cmd_codegen(args) -> int:
    model = io.read_model(args.model)
    source = codegen.export_portable_source(model)
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(source)
    print(f"wrote embedded source to {args.out}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    if args.source == "-":
        lines = sys.stdin.read().splitlines()
    else:
        with open(args.source, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    added = io.ingest_stream(lines, args.out, sample_rate_hz=args.sample_rate)
    print(f"appended {added} rows to {args.out}")
    return EXIT_OK


_COMMANDS = {
    "sweep-gen": _cmd_sweep_gen,
    "rir": _cmd_rir,
    "synth": _cmd_synth,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "search": _cmd_search,
    "codegen": _cmd_codegen,
    "ingest": _cmd_ingest,
}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as e:  # argparse exits 2 on usage errors, 0 on --help
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except (SirecError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
