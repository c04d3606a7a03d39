"""Command-line interface.

Subcommands: gen-data, stats, train, eval, analyze, report. Exit codes:
0 success, 2 configuration/usage error, 3 data error, 4 numerical
divergence.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys

from scriptmix.corpus_stats import diversity_csv, diversity_stats
from scriptmix.errors import ConfigError, DataError, DivergenceError
from scriptmix.experiment.analyze import analyze_transfer, char_counts
from scriptmix.experiment.config import ExperimentConfig, GenConfig
from scriptmix.experiment.data import CorpusData
from scriptmix.experiment.report import aggregate_runs, results_csv
from scriptmix.experiment.runner import evaluate_checkpoint, run_training
from scriptmix.experiment.sampling import sample_k_subset
from scriptmix.metrics import read_pairs_tsv
from scriptmix.synthdata.corpus import generate_corpus, load_manifest
from scriptmix.synthdata.profiles import make_overlap_scripts


def _deterministic_context(enabled: bool):
    if not enabled:
        return contextlib.nullcontext()
    try:
        from threadpoolctl import threadpool_limits

        return threadpool_limits(limits=1)
    except ImportError:
        return contextlib.nullcontext()


def cmd_gen_data(args) -> int:
    cfg = GenConfig.from_file(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    profiles = make_overlap_scripts(
        cfg.n_shared,
        cfg.uniques,
        seed,
        names=cfg.names,
        zipf_exponent=cfg.zipf_exponent,
        line_length_range=cfg.line_length_range,
        writer_styles=cfg.writer_styles,
        rtl=cfg.rtl,
    )
    for i, (profile, corpus) in enumerate(zip(profiles, cfg.corpora)):
        out_dir = os.path.join(args.out, profile.script_id)
        samples = generate_corpus(
            profile,
            n_lines=int(corpus["n_lines"]),
            split_fractions=tuple(corpus.get("split_fractions", (0.8, 0.1, 0.1))),
            seed=seed * 1000 + i,
            out_dir=out_dir,
            duplication=float(corpus.get("duplication", 0.0)),
            lexicon_size=corpus.get("lexicon_size"),
            height=cfg.height,
        )
        print(f"{profile.script_id}: {len(samples)} lines -> {out_dir}")
    return 0


def cmd_stats(args) -> int:
    rows = load_manifest(args.manifest)
    rows = [r for r in rows if r.split == args.split]
    if not rows:
        raise DataError(f"no rows in split {args.split!r}")
    name = args.name or os.path.basename(os.path.dirname(os.path.abspath(args.manifest)))
    stats = {}
    ks = [int(k) for k in args.k.split(",")] if args.k else []
    for k in ks:
        if k > len(rows):
            raise DataError(f"K={k} exceeds split size {len(rows)}")
        subset = sample_k_subset(rows, k, name, k, args.seed)
        stats[f"{name}_K{k}"] = diversity_stats([r.transcript for r in subset])
    stats[f"{name}_full"] = diversity_stats([r.transcript for r in rows])
    csv_text = diversity_csv(stats)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(csv_text)
    return 0


def cmd_train(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    with _deterministic_context(args.deterministic):
        result = run_training(cfg, args.run, args.out, deterministic=args.deterministic)
    print(
        f"run {args.run}: best val CER {result.best_val_cer:.4f} at step {result.best_step} "
        f"-> {result.checkpoint_path}"
    )
    return 0


def cmd_eval(args) -> int:
    out_dir = args.out_dir or os.path.dirname(os.path.abspath(args.checkpoint))
    with _deterministic_context(args.deterministic):
        cer, predictions = evaluate_checkpoint(
            args.checkpoint,
            args.manifest,
            args.split,
            batch_size=args.batch_size,
            out_dir=out_dir,
            max_width=args.max_width,
        )
    print(f"{args.split} CER {cer:.4f} over {len(predictions)} samples -> {out_dir}")
    return 0


def _load_run_meta(run_dir: str) -> dict:
    path = os.path.join(run_dir, "metrics.json")
    if not os.path.exists(path):
        raise DataError(f"no metrics.json in {run_dir}")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def cmd_analyze(args) -> int:
    single_m = _load_run_meta(args.single_dir)
    multi_m = _load_run_meta(args.multi_dir)
    cfg_s = ExperimentConfig.from_dict(single_m["config"])
    cfg_m = ExperimentConfig.from_dict(multi_m["config"])
    if cfg_s.target != cfg_m.target:
        raise ConfigError(f"runs target different datasets: {cfg_s.target} vs {cfg_m.target}")
    if str(cfg_s.k) != str(cfg_m.k):
        raise ConfigError(f"runs use different K: {cfg_s.k} vs {cfg_m.k}")
    if cfg_s.iteration_budget != cfg_m.iteration_budget:
        raise ConfigError(
            f"iteration budgets differ: {cfg_s.iteration_budget} vs {cfg_m.iteration_budget}"
        )
    sub_s = open(os.path.join(args.single_dir, "train_subset.tsv"), "rb").read()
    sub_m = open(os.path.join(args.multi_dir, "train_subset.tsv"), "rb").read()
    if sub_s != sub_m:
        raise DataError("target K-subsets differ between the two runs; comparison is not controlled")

    preds_s = read_pairs_tsv(os.path.join(args.single_dir, f"predictions_{args.split}.tsv"))
    preds_m = read_pairs_tsv(os.path.join(args.multi_dir, f"predictions_{args.split}.tsv"))

    involved = [cfg_m.target] + list(cfg_m.auxiliaries)
    inventories = {
        name: CorpusData(cfg_m.datasets[name], cfg_m.input_height, cfg_m.max_width).inventory()
        for name in involved
    }
    subset_rows = load_manifest(os.path.join(args.single_dir, "train_subset.tsv"))
    counts_single = char_counts([r.transcript for r in subset_rows])
    multi_transcripts = [r.transcript for r in subset_rows]
    for aux_name in cfg_m.auxiliaries:
        aux_rows = load_manifest(cfg_m.datasets[aux_name])
        multi_transcripts.extend(r.transcript for r in aux_rows if r.split == "train")
    counts_multi = char_counts(multi_transcripts)

    report = analyze_transfer(
        preds_s,
        preds_m,
        inventories,
        cfg_m.target,
        counts_single,
        counts_multi,
        bins=args.bins,
    )
    report.write(args.out)
    sm = f"{report.shared_mean:+.2f}" if report.shared_mean is not None else "n/a"
    um = f"{report.unique_mean:+.2f}" if report.unique_mean is not None else "n/a"
    p = f"{report.welch.p:.4g}" if report.welch else "n/a"
    print(
        f"target {report.target}: CER {report.cer_single:.4f} -> {report.cer_multi:.4f}; "
        f"mean delta shared {sm} pp, unique {um} pp (welch p {p}) -> {args.out}"
    )
    return 0


def cmd_report(args) -> int:
    rows = aggregate_runs(args.run_dirs, split=args.split)
    csv_text = results_csv(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(csv_text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scriptmix", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate synthetic script corpora")
    g.add_argument("--config", required=True, help="generator config JSON")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--seed", type=int, default=None, help="override the config seed")
    g.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("stats", help="corpus diversity statistics")
    s.add_argument("--manifest", required=True)
    s.add_argument("--split", default="train")
    s.add_argument("--k", default="", help="comma-separated subset sizes, e.g. 100,500,1000")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--name", default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_stats)

    t = sub.add_parser("train", help="run one training configuration")
    t.add_argument("--config", required=True, help="experiment config JSON")
    t.add_argument("--run", type=int, default=0, help="run index (offsets the seed)")
    t.add_argument("--out", required=True, help="run output directory")
    t.add_argument("--seed", type=int, default=None, help="override the config seed")
    t.add_argument("--deterministic", action="store_true")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint on a manifest split")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--manifest", required=True)
    e.add_argument("--split", default="test")
    e.add_argument("--batch-size", type=int, default=16)
    e.add_argument("--max-width", type=int, default=1450)
    e.add_argument("--out-dir", default=None)
    e.add_argument("--deterministic", action="store_true")
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("analyze", help="character-level transfer analysis of two runs")
    a.add_argument("--single-dir", required=True)
    a.add_argument("--multi-dir", required=True)
    a.add_argument("--split", default="test")
    a.add_argument("--bins", type=int, default=4)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("report", help="aggregate runs into a mean/std table")
    r.add_argument("run_dirs", nargs="+")
    r.add_argument("--split", default="test")
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except DivergenceError as e:
        print(f"divergence: {e}", file=sys.stderr)
        return 4
    except FileNotFoundError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
