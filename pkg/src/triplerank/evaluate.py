"""Ranked evaluation: reciprocal-rank metrics and the run report."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from .graph import SplitBundle
from .pipeline import PipelineContext
from .scoring import RankedBlock, ScoringError, rank_block

log = logging.getLogger(__name__)


class MetricError(ValueError):
    """Metric requested over an empty rank list."""


def mrr(ranks: Sequence[int]) -> float:
    """Arithmetic mean of reciprocal ranks."""
    if not ranks:
        raise MetricError("MRR is undefined for an empty rank list")
    if any(r < 1 for r in ranks):
        raise ValueError("ranks must be >= 1")
    return sum(1.0 / r for r in ranks) / len(ranks)


def hits_at(ranks: Sequence[int], k: int) -> float:
    """Fraction of ranks at or above the cutoff."""
    if k < 1:
        raise ValueError("cutoff must be >= 1")
    if not ranks:
        raise MetricError("hits@k is undefined for an empty rank list")
    return sum(1 for r in ranks if r <= k) / len(ranks)


@dataclass(frozen=True)
class QueryResult:
    query_id: str
    direction: str
    rank: int


@dataclass
class EvalReport:
    results: list[QueryResult]
    mrr: float
    hits1: float
    fingerprint: str
    config: dict[str, Any]
    failed: list[str] = field(default_factory=list)
    timing: dict[str, float] = field(default_factory=dict)

    @property
    def partial(self) -> bool:
        return bool(self.failed)

    def recompute_aggregates(self) -> tuple[float, float]:
        ranks = [r.rank for r in self.results]
        return mrr(ranks), hits_at(ranks, 1)

    def to_json(self, include_timing: bool = False) -> str:
        """Canonical machine-readable report. Timing is excluded by default
        so resumed and uninterrupted runs serialize identically."""
        payload: dict[str, Any] = {
            "fingerprint": self.fingerprint,
            "config": self.config,
            "mrr": self.mrr,
            "hits1": self.hits1,
            "queries": [
                {"id": r.query_id, "direction": r.direction, "rank": r.rank}
                for r in self.results
            ],
            "failed": self.failed,
        }
        if include_timing:
            payload["timing"] = self.timing
        return json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2)

    def to_table(self) -> str:
        lines = [
            f"fingerprint: {self.fingerprint}",
            f"queries:     {len(self.results)}" + (f" ({len(self.failed)} failed)" if self.failed else ""),
            f"MRR:         {self.mrr:.4f}",
            f"Hits@1:      {self.hits1:.4f}",
        ]
        if self.timing:
            lines.append(f"seconds/query: {self.timing.get('seconds_per_query', 0.0):.3f}")
        return "\n".join(lines)


def _rank_cache_path(cache_dir: str | Path | None, fingerprint: str) -> Path | None:
    if cache_dir is None:
        return None
    d = Path(cache_dir) / fingerprint
    d.mkdir(parents=True, exist_ok=True)
    return d / "ranks.jsonl"


def _load_rank_cache(path: Path | None) -> dict[int, int]:
    cached: dict[int, int] = {}
    if path is not None and path.exists():
        with open(path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    row = json.loads(line)
                    cached[row["i"]] = row["rank"]
        if cached:
            log.info("resuming: %d blocks already ranked", len(cached))
    return cached


def run_evaluation(
    bundle: SplitBundle,
    mode: str,
    ctx: PipelineContext,
    fingerprint: str = "",
    config: dict[str, Any] | None = None,
    cache_dir: str | Path | None = None,
    concurrency: int = 1,
) -> EvalReport:
    """Rank every query block and aggregate MRR / Hits@1.

    Blocks are scored concurrently up to `concurrency`; per-block ranks are
    checkpointed under the config fingerprint so an interrupted run resumes
    from where it stopped and produces an identical report.
    """
    blocks = bundle.queries
    if not blocks:
        raise MetricError("no query blocks to evaluate")
    rank_path = _rank_cache_path(cache_dir, fingerprint or "default")
    cached = _load_rank_cache(rank_path)

    ranks: dict[int, int] = dict(cached)
    failed: list[str] = []
    todo = [i for i in range(len(blocks)) if i not in cached]
    started = time.monotonic()

    def _work(i: int) -> tuple[int, RankedBlock]:
        return i, rank_block(blocks[i], mode, ctx)

    if todo:
        with ThreadPoolExecutor(max_workers=max(1, concurrency)) as pool:
            for i, outcome in zip(todo, pool.map(lambda i: _safe(_work, i), todo)):
                if isinstance(outcome, ScoringError):
                    failed.append(_query_id(i))
                    log.error("block %s failed: %s", _query_id(i), outcome)
                    continue
                _, ranked = outcome
                ranks[i] = ranked.rank_of_positive
                if rank_path is not None:
                    with open(rank_path, "a", encoding="utf-8") as f:
                        f.write(json.dumps({"i": i, "rank": ranks[i]}) + "\n")
    elapsed = time.monotonic() - started

    results = [
        QueryResult(query_id=_query_id(i), direction=blocks[i].direction, rank=ranks[i])
        for i in sorted(ranks)
    ]
    if not results:
        raise ScoringError(f"every block failed; first failures: {failed[:3]}")
    rank_values = [r.rank for r in results]
    report = EvalReport(
        results=results,
        mrr=mrr(rank_values),
        hits1=hits_at(rank_values, 1),
        fingerprint=fingerprint,
        config=config or {},
        failed=failed,
        timing={
            "seconds_total": elapsed,
            "seconds_per_query": elapsed / len(todo) if todo else 0.0,
        },
    )
    if failed:
        log.warning("report is partial: %d blocks failed", len(failed))
    return report


def _query_id(i: int) -> str:
    return f"q{i:05d}"


def _safe(fn, i):
    try:
        return fn(i)
    except ScoringError as exc:
        return exc
