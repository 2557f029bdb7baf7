"""Command-line entry point: stats, paths, gen-sft, score, and eval."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import Any

from .config import ConfigError, PipelineConfig, load_config
from .evaluate import run_evaluation
from .graph import (
    Graph,
    QueryBlock,
    SplitBundle,
    check_inductive_disjointness,
    load_graph,
    load_query_blocks,
)
from .neighbors import CachedEmbedder, HashEmbedder, RemoteEmbedder
from .paths import extract_paths
from .pipeline import PipelineContext
from .scoring import (
    ConstantScorer,
    OracleScorer,
    RandomScorer,
    RemoteScorer,
    ScoreCache,
    rank_block,
)
from .sftgen import build_instruction_corpus

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

SPLIT_FILES = (
    "train.tsv",
    "train-2000.tsv",
    "train-1000.tsv",
    "test-transductive.tsv",
    "test-inductive.tsv",
)


def build_embedder(cfg: PipelineConfig):
    if cfg.embedder == "remote":
        inner = RemoteEmbedder(cfg.embedder_endpoint, model=cfg.embedder_model)
    else:
        inner = HashEmbedder(dim=cfg.embed_dim)
    return CachedEmbedder(inner)


def build_scorer(cfg: PipelineConfig, bundle: SplitBundle | None = None):
    if cfg.scorer == "constant":
        return ConstantScorer(0.5)
    if cfg.scorer == "random":
        return RandomScorer(cfg.seed)
    if cfg.scorer == "remote":
        return RemoteScorer(
            cfg.scorer_endpoint,
            model=cfg.scorer_model or "default",
            api_key=cfg.api_key(),
            raw_probability=cfg.raw_yes_probability,
        )
    truth = set()
    if bundle is not None:
        truth.update(b.positive for b in bundle.queries)
        truth.update(bundle.train.triples)
        if bundle.test is not None:
            truth.update(bundle.test.triples)
    return OracleScorer(truth)


def load_bundle(cfg: PipelineConfig, need_queries: bool = True) -> SplitBundle:
    train = load_graph(cfg.resolved_train_path(), name="train")
    test_path = cfg.resolved_test_path()
    test = load_graph(test_path, name="test") if test_path else None
    queries_path = cfg.resolved_queries_path()
    queries: list[QueryBlock] = []
    if queries_path:
        queries = load_query_blocks(queries_path)
    elif need_queries:
        raise ConfigError("no query-block file configured (queries_path or data_dir)")
    return SplitBundle(train=train, test=test, queries=queries)


def build_context(cfg: PipelineConfig, bundle: SplitBundle) -> PipelineContext:
    evidence = bundle.evidence_graph(cfg.setting)
    occ = (
        bundle.train.occurrence_table()
        if cfg.degree_source == "train"
        else evidence.occurrence_table()
    )
    cache_path = Path(cfg.cache_dir) / cfg.fingerprint()
    cache_path.mkdir(parents=True, exist_ok=True)
    return PipelineContext(
        evidence=evidence,
        scorer=build_scorer(cfg, bundle),
        embedder=build_embedder(cfg),
        occ=occ,
        max_path_len=cfg.max_path_len,
        path_budget=cfg.path_budget,
        neighbor_budget=cfg.neighbor_budget,
        support_size=cfg.support_size,
        support_exclude=cfg.support_exclude,
        strict_neighbor_orientation=cfg.strict_neighbor_orientation,
        bidirectional_paths=cfg.bidirectional_paths,
        prompt_word_budget=cfg.prompt_word_budget,
        seed=cfg.seed,
        evidence_tag="test" if cfg.setting == "inductive" else "train",
        score_cache=ScoreCache(cache_path / "scores.jsonl"),
    )


def cmd_stats(cfg: PipelineConfig, out=None) -> int:
    """Print |R| / |E| / |T| for every known split file in the data dir."""
    out = out or sys.stdout
    rows: list[tuple[str, Graph]] = []
    if cfg.data_dir:
        for name in SPLIT_FILES:
            path = Path(cfg.data_dir) / name
            if path.exists():
                rows.append((name.removesuffix(".tsv"), load_graph(path, name=name)))
    else:
        rows.append(("train", load_graph(cfg.resolved_train_path(), name="train")))
        test_path = cfg.resolved_test_path()
        if test_path:
            rows.append((f"test-{cfg.setting}", load_graph(test_path, name="test")))
    if not rows:
        print("no split files found", file=out)
        log.warning("stats: nothing to report under %s", cfg.data_dir)
        return EXIT_OK
    print(f"{'split':<20} {'relations':>9} {'entities':>9} {'triples':>9}", file=out)
    for name, g in rows:
        s = g.stats()
        print(f"{name:<20} {s.relations:>9} {s.entities:>9} {s.triples:>9}", file=out)
    by_name = dict(rows)
    if "train" in by_name and "test-inductive" in by_name:
        disjoint = check_inductive_disjointness(by_name["train"], by_name["test-inductive"])
        print(f"inductive entity disjointness: {'ok' if disjoint else 'VIOLATED'}", file=out)
    return EXIT_OK


def cmd_paths(cfg: PipelineConfig, out=None) -> int:
    """Report reasoning-path availability over the query blocks."""
    out = out or sys.stdout
    bundle = load_bundle(cfg)
    evidence = bundle.evidence_graph(cfg.setting)
    occ = (
        bundle.train.occurrence_table()
        if cfg.degree_source == "train"
        else evidence.occurrence_table()
    )
    positives = sorted({b.positive for b in bundle.queries})
    histogram: Counter[int] = Counter()
    for triple in positives:
        if triple.head == triple.tail:
            histogram[0] += 1
            continue
        found = extract_paths(
            evidence,
            triple.head,
            triple.tail,
            triple.relation,
            max_len=cfg.max_path_len,
            occ=occ,
            bidirectional=cfg.bidirectional_paths,
        )
        histogram[len(found)] += 1
    total = len(positives)
    zero = histogram.get(0, 0)
    print(f"queries: {total}", file=out)
    print(f"zero-path queries: {zero} ({zero / total:.1%})" if total else "no queries", file=out)
    print("path-count histogram:", file=out)
    for count in sorted(histogram):
        print(f"  {count:>4} paths: {histogram[count]} queries", file=out)
    return EXIT_OK


def cmd_gen_sft(cfg: PipelineConfig, out_path: str | None, out=None) -> int:
    out = out or sys.stdout
    train = load_graph(cfg.resolved_train_path(), name="train")
    ctx = PipelineContext(
        evidence=train,
        scorer=ConstantScorer(),
        embedder=build_embedder(cfg),
        max_path_len=cfg.max_path_len,
        path_budget=cfg.path_budget,
        neighbor_budget=cfg.neighbor_budget,
        support_size=cfg.support_size,
        support_exclude=cfg.support_exclude,
        strict_neighbor_orientation=cfg.strict_neighbor_orientation,
        bidirectional_paths=cfg.bidirectional_paths,
        prompt_word_budget=cfg.prompt_word_budget,
        seed=cfg.seed,
        evidence_tag="train",
    )
    destination = out_path or str(Path(cfg.out_dir) / f"sft-{cfg.fingerprint()}.jsonl")
    counts = build_instruction_corpus(
        train,
        destination,
        negatives_per_positive=cfg.negatives_per_positive,
        master_seed=cfg.seed,
        ctx=ctx,
    )
    print(f"wrote {counts['records']} records to {destination}", file=out)
    print(f"labels: {counts['Y']} Y / {counts['N']} N", file=out)
    return EXIT_OK


def cmd_score(cfg: PipelineConfig, out_path: str | None, out=None) -> int:
    out = out or sys.stdout
    bundle = load_bundle(cfg)
    ctx = build_context(cfg, bundle)
    destination = out_path or str(Path(cfg.out_dir) / f"scores-{cfg.fingerprint()}.jsonl")
    Path(destination).parent.mkdir(parents=True, exist_ok=True)
    with open(destination, "w", encoding="utf-8") as f:
        for i, block in enumerate(bundle.queries):
            ranked = rank_block(block, cfg.mode, ctx)
            f.write(
                json.dumps(
                    {
                        "block": i,
                        "direction": block.direction,
                        "rank_of_positive": ranked.rank_of_positive,
                        "candidates": [
                            {
                                "fact": list(sc.candidate),
                                "p_tar": sc.p_tar,
                                "p_sr": sc.p_sr,
                                "score": sc.score,
                            }
                            for sc in ranked.scored
                        ],
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    print(f"wrote per-block scores to {destination}", file=out)
    return EXIT_OK


def cmd_eval(cfg: PipelineConfig, out_path: str | None, out=None) -> int:
    out = out or sys.stdout
    bundle = load_bundle(cfg)
    ctx = build_context(cfg, bundle)
    report = run_evaluation(
        bundle,
        cfg.mode,
        ctx,
        fingerprint=cfg.fingerprint(),
        config=cfg.to_dict(),
        cache_dir=cfg.cache_dir,
        concurrency=cfg.concurrency,
    )
    destination = out_path or str(Path(cfg.out_dir) / f"report-{cfg.fingerprint()}.json")
    Path(destination).parent.mkdir(parents=True, exist_ok=True)
    with open(destination, "w", encoding="utf-8") as f:
        f.write(report.to_json() + "\n")
    print(report.to_table(), file=out)
    print(f"report written to {destination}", file=out)
    return EXIT_RUNTIME if report.partial else EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML or JSON config file")
    parser.add_argument("--data-dir", dest="data_dir")
    parser.add_argument("--train", dest="train_path")
    parser.add_argument("--test", dest="test_path")
    parser.add_argument("--queries", dest="queries_path")
    parser.add_argument("--mode", choices=("TAR", "SR", "FULL"))
    parser.add_argument("--setting", choices=("inductive", "transductive"))
    parser.add_argument("--scorer", choices=("oracle", "constant", "random", "remote"))
    parser.add_argument("--seed", type=int)
    parser.add_argument("--cache-dir", dest="cache_dir")
    parser.add_argument("-v", "--verbose", action="store_true")


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    keys = (
        "data_dir",
        "train_path",
        "test_path",
        "queries_path",
        "mode",
        "setting",
        "scorer",
        "seed",
        "cache_dir",
    )
    return {k: getattr(args, k, None) for k in keys}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="triplerank",
        description="Knowledge-graph completion via prompt-scored candidate ranking",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_out in (
        ("stats", False),
        ("paths", False),
        ("gen-sft", True),
        ("score", True),
        ("eval", True),
    ):
        p = sub.add_parser(name)
        _add_common(p)
        if needs_out:
            p.add_argument("--out", help="output file path")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        cfg = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "stats":
            return cmd_stats(cfg)
        if args.command == "paths":
            return cmd_paths(cfg)
        if args.command == "gen-sft":
            return cmd_gen_sft(cfg, args.out)
        if args.command == "score":
            return cmd_score(cfg, args.out)
        if args.command == "eval":
            return cmd_eval(cfg, args.out)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        log.error("run failed: %s", exc, exc_info=True)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
