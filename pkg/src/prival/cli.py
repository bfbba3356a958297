"""Command-line entry points for corpus ingestion, segmentation, synthetic
corpora, experiments, strategy comparisons, similarity, and the labeling
service."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import ingestion, runner, segmenter
from .embedding import fixture_embedding, load_vectors
from .oracle import (
    RelabelMode,
    SimulatedOracle,
    read_truths_jsonl,
    write_hit_batches_jsonl,
    write_truths_jsonl,
)
from .runner import ExperimentConfig, derive_seed
from .segmenter import DEFAULT_KEYWORDS, Category
from .strategies import StrategyKind


def _load_embedding(path: str | None):
    return load_vectors(path) if path else fixture_embedding()


def _cmd_ingest(args) -> int:
    result = ingestion.load_corpus(args.directory)
    ingestion.write_corpus_jsonl(result.policies, args.out)
    print(
        f"wrote {len(result.policies)} policies to {args.out} "
        f"(skipped {result.skipped_invalid} invalid, {result.skipped_unreadable} unreadable)"
    )
    return 0


def _cmd_segment(args) -> int:
    emb = _load_embedding(args.embedding)
    category = Category(args.category)
    policies = ingestion.read_corpus_jsonl(args.corpus)
    segments = []
    for policy in policies:
        segments.extend(
            segmenter.segment_policy(
                policy, category, DEFAULT_KEYWORDS[category], emb, c=args.boundary_constant
            )
        )
    segmenter.write_segments_jsonl(segments, args.out)
    print(f"wrote {len(segments)} segments to {args.out}")
    return 0


def _cmd_synth(args) -> int:
    category = Category(args.category)
    segments, truths = runner.generate_synthetic_corpus(
        args.n, args.nsr, args.ambiguity, category, args.seed
    )
    segmenter.write_segments_jsonl(segments, args.out)
    write_truths_jsonl(truths, args.truths)
    print(f"wrote {len(segments)} segments to {args.out} and truths to {args.truths}")
    return 0


def _experiment_inputs(args):
    emb = _load_embedding(args.embedding)
    category = Category(args.category)
    if args.segments and args.truths:
        segments = segmenter.read_segments_jsonl(args.segments)
        truths = read_truths_jsonl(args.truths)
    else:
        segments, truths = runner.generate_synthetic_corpus(
            args.n, args.nsr, args.ambiguity, category, args.corpus_seed
        )
    test_set = runner.make_test_set(args.test_n, category, emb, seed=args.corpus_seed + 1)
    return emb, category, segments, truths, test_set


def _make_config(args, category, strategy, seed) -> ExperimentConfig:
    return ExperimentConfig(
        category=category,
        strategy=strategy,
        at=args.at,
        relabel_mode=RelabelMode(args.relabel),
        le_budget=args.budget,
        seed=seed,
    )


def _cmd_run(args) -> int:
    emb, category, segments, truths, test_set = _experiment_inputs(args)
    cfg = _make_config(args, category, StrategyKind(args.strategy), args.seed)
    oracle = SimulatedOracle(truths, seed=derive_seed(cfg.seed, "oracle"))
    session = runner.run_experiment_session(cfg, segments, oracle, test_set, emb)
    runner.write_records_csv(session.records, args.out)
    print(f"wrote {len(session.records)} iteration records to {args.out}")
    if args.hits:
        write_hit_batches_jsonl(session.hit_batches, args.hits)
        print(f"wrote {len(session.hit_batches)} hit batches to {args.hits}")
    return 0


def _cmd_compare(args) -> int:
    emb, category, segments, truths, test_set = _experiment_inputs(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    strategies = [StrategyKind(s) for s in args.strategies.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    for strategy in strategies:
        for seed in seeds:
            cfg = _make_config(args, category, strategy, seed)
            oracle = SimulatedOracle(truths, seed=derive_seed(cfg.seed, "oracle"))
            records = runner.run_experiment(cfg, segments, oracle, test_set, emb)
            path = out_dir / f"{strategy.value}_seed{seed}.csv"
            runner.write_records_csv(records, path)
            print(f"wrote {path}")
    return 0


def _cmd_similarity(args) -> int:
    emb = _load_embedding(args.embedding)
    set_a = segmenter.read_segments_jsonl(args.a)
    set_b = set_a if args.b == args.a else segmenter.read_segments_jsonl(args.b)
    value = runner.corpus_similarity(set_a, set_b, emb, sample_cap=args.sample_cap, seed=args.seed)
    print(f"{value:.6f}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceContext, create_app

    emb = _load_embedding(args.embedding)
    category = Category(args.category)
    if args.segments and args.truths:
        segments = segmenter.read_segments_jsonl(args.segments)
        truths = read_truths_jsonl(args.truths)
    else:
        segments, truths = runner.generate_synthetic_corpus(
            args.n, args.nsr, args.ambiguity, category, args.corpus_seed
        )
    test_set = runner.make_test_set(args.test_n, category, emb, seed=args.corpus_seed + 1)
    context = ServiceContext(
        segments=segments,
        truths=truths,
        emb=emb,
        test_set=test_set,
        journal_path=args.journal,
    )
    uvicorn.run(create_app(context, restore=args.journal is not None), host=args.host, port=args.port)
    return 0


def _add_corpus_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--category", default="contact", choices=[c.value for c in Category])
    p.add_argument("--embedding", default=None, help="vector file (default: built-in fixture)")
    p.add_argument("--segments", default=None, help="segments JSONL (else synthesize)")
    p.add_argument("--truths", default=None, help="ground-truth JSONL (else synthesize)")
    p.add_argument("--n", type=int, default=2000, help="synthetic corpus size")
    p.add_argument("--nsr", type=float, default=0.10, help="synthetic negative ratio")
    p.add_argument("--ambiguity", type=float, default=0.05)
    p.add_argument("--corpus-seed", type=int, default=7)
    p.add_argument("--test-n", type=int, default=400, help="balanced test-set size")


def _add_experiment_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--at", type=float, default=0.8)
    p.add_argument("--relabel", default="label_and_discard", choices=[m.value for m in RelabelMode])
    p.add_argument("--budget", type=int, default=8000, help="labeling-effort budget")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prival")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load, sanitize and filter a policy directory")
    p.add_argument("directory")
    p.add_argument("--out", default="corpus.jsonl")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("segment", help="segment a corpus for one category")
    p.add_argument("--corpus", required=True)
    p.add_argument("--category", default="contact", choices=[c.value for c in Category])
    p.add_argument("--embedding", default=None)
    p.add_argument("--boundary-constant", type=float, default=2.5)
    p.add_argument("--out", default="segments.jsonl")
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--nsr", type=float, default=0.10)
    p.add_argument("--ambiguity", type=float, default=0.05)
    p.add_argument("--category", default="contact", choices=[c.value for c in Category])
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", default="segments.jsonl")
    p.add_argument("--truths", default="truths.jsonl")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("run", help="run one active-learning experiment")
    _add_corpus_options(p)
    _add_experiment_options(p)
    p.add_argument("--strategy", default="lc", choices=[s.value for s in StrategyKind])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="records.csv")
    p.add_argument("--hits", default=None, help="also write the hit-batch ledger JSONL")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="run a strategy/seed grid")
    _add_corpus_options(p)
    _add_experiment_options(p)
    p.add_argument("--strategies", default="random,lc,bmu")
    p.add_argument("--seeds", default="0,1,2")
    p.add_argument("--out", default="compare_out")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("similarity", help="mean pairwise WMD within/between segment sets")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--embedding", default=None)
    p.add_argument("--sample-cap", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_similarity)

    p = sub.add_parser("serve", help="start the labeling service")
    _add_corpus_options(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--journal", default=None, help="JSONL journal for crash recovery")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
