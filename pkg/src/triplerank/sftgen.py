"""Instruction-corpus generation for supervised fine-tuning.

Every training triple yields one 'Y' record per task plus m 'N' records per
task built from corrupted copies; corruptions that exist in the training
graph are rejected as false negatives.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator

from .graph import Graph, Triple
from .pipeline import PipelineContext
from .prompts import TEMPLATE_VERSION, TASK_SR, TASK_TAR

log = logging.getLogger(__name__)

CORRUPTION_NONE = "none"
CORRUPTION_HEAD = "head-replaced"
CORRUPTION_TAIL = "tail-replaced"


@dataclass(frozen=True)
class InstructionRecord:
    task: str
    prompt: str
    label: str  # 'Y' | 'N'
    source: Triple
    corruption: str
    query: Triple
    seed: str

    def to_json(self) -> str:
        payload = {
            "task": self.task,
            "prompt": self.prompt,
            "label": self.label,
            "meta": {
                "source": list(self.source),
                "corruption": self.corruption,
                "query": list(self.query),
                "seed": self.seed,
                "template_version": TEMPLATE_VERSION,
            },
        }
        return json.dumps(payload, sort_keys=True, ensure_ascii=False)


def _all_corruptions(g: Graph, t: Triple) -> list[tuple[Triple, str]]:
    out = []
    for ent in g.entities:
        if ent != t.head:
            cand = Triple(ent, t.relation, t.tail)
            if cand not in g:
                out.append((cand, CORRUPTION_HEAD))
        if ent != t.tail:
            cand = Triple(t.head, t.relation, ent)
            if cand not in g:
                out.append((cand, CORRUPTION_TAIL))
    return out


def gen_negatives(
    g: Graph,
    t: Triple,
    m: int,
    seed: int | str,
) -> list[tuple[Triple, str]]:
    """Corrupt one slot of t with a random graph entity, m distinct times.

    Corruptions present in the graph's triple set are rejected. When fewer
    than m valid corruptions exist, all of them are returned with a warning.
    Deterministic under the seed.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = random.Random(f"neg:{seed}")
    entities = g.entities
    chosen: list[tuple[Triple, str]] = []
    seen: set[Triple] = set()
    attempts = 0
    max_attempts = 30 * (m + 5)
    while len(chosen) < m and attempts < max_attempts:
        attempts += 1
        replace_head = rng.random() < 0.5
        ent = entities[rng.randrange(len(entities))]
        if replace_head:
            if ent == t.head:
                continue
            cand, kind = Triple(ent, t.relation, t.tail), CORRUPTION_HEAD
        else:
            if ent == t.tail:
                continue
            cand, kind = Triple(t.head, t.relation, ent), CORRUPTION_TAIL
        if cand in g or cand in seen:
            continue
        seen.add(cand)
        chosen.append((cand, kind))
    if len(chosen) < m:
        remaining = [(c, k) for c, k in _all_corruptions(g, t) if c not in seen]
        rng.shuffle(remaining)
        chosen.extend(remaining[: m - len(chosen)])
        if len(chosen) < m:
            log.warning(
                "only %d of %d requested corruptions exist for %s", len(chosen), m, t
            )
    return chosen


def iter_instruction_records(
    g: Graph,
    ctx: PipelineContext,
    negatives_per_positive: int = 12,
    master_seed: int = 0,
) -> Iterator[InstructionRecord]:
    """Yield corpus records ordered by training-triple index.

    Per triple: TAR 'Y', TAR 'N' x m, SR 'Y', SR 'N' x m. The same m
    corruptions serve both tasks. A record's prompt is built exactly as at
    inference time; the positive can never surface in its own evidence
    because support sampling excludes the query's entities, paths never use
    the query relation, and neighbor selection drops the query triple.
    """
    for idx, triple in enumerate(g.triples):
        neg_seed = f"{master_seed}:{idx}"
        negatives = gen_negatives(g, triple, negatives_per_positive, seed=neg_seed)
        queries = [(triple, CORRUPTION_NONE)] + negatives
        for task in (TASK_TAR, TASK_SR):
            for query, corruption in queries:
                prompt = ctx.tar_prompt(query) if task == TASK_TAR else ctx.sr_prompt(query)
                yield InstructionRecord(
                    task=task,
                    prompt=prompt.text,
                    label="Y" if corruption == CORRUPTION_NONE else "N",
                    source=triple,
                    corruption=corruption,
                    query=query,
                    seed=neg_seed,
                )


def build_instruction_corpus(
    g: Graph,
    out_path: str | Path,
    negatives_per_positive: int = 12,
    master_seed: int = 0,
    ctx: PipelineContext | None = None,
) -> dict[str, Any]:
    """Write the JSON-lines corpus for a training graph; returns counts.

    Fully reproducible from (graph, settings, master seed): rerunning with
    identical inputs produces identical bytes.
    """
    if ctx is None:
        from .neighbors import CachedEmbedder, HashEmbedder
        from .scoring import ConstantScorer

        ctx = PipelineContext(
            evidence=g,
            scorer=ConstantScorer(),
            embedder=CachedEmbedder(HashEmbedder()),
            seed=master_seed,
            evidence_tag="train",
        )
    counts = {"records": 0, "Y": 0, "N": 0, "TAR": 0, "SR": 0}
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as f:
        for record in iter_instruction_records(
            g, ctx, negatives_per_positive=negatives_per_positive, master_seed=master_seed
        ):
            f.write(record.to_json() + "\n")
            counts["records"] += 1
            counts[record.label] += 1
            counts[record.task] += 1
    log.info(
        "wrote %d instruction records (%d Y / %d N) to %s",
        counts["records"],
        counts["Y"],
        counts["N"],
        out_path,
    )
    return counts
