"""Deterministic prompt rendering for the two triple-judgment tasks.

Template wording is fixed and versioned here: regenerating a prompt from the
same structured inputs must produce identical bytes, or cached scores and
regenerated corpora stop being comparable.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import Any, Sequence

from .graph import Triple, linearize, normalize_label
from .neighbors import NeighborSet
from .paths import ReasoningPath

log = logging.getLogger(__name__)

TEMPLATE_VERSION = "v1"

TASK_TAR = "TAR"
TASK_SR = "SR"

ANSWER_INSTRUCTION = "Answer with Y or N."
NO_SUPPORT_CLAUSE = "No example facts with this relation are available."
NO_PATHS_CLAUSE = "No reasoning paths were found."

DEFAULT_WORD_BUDGET = 1024


@dataclass(frozen=True)
class PromptInstance:
    """A rendered prompt plus the structured evidence it was rendered from."""

    task: str
    text: str
    query: Triple
    evidence: dict[str, Any]
    template_version: str = TEMPLATE_VERSION

    def sha(self) -> str:
        payload = f"{self.task}\x00{self.template_version}\x00{self.text}"
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def to_record(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "text": self.text,
            "query": list(self.query),
            "evidence": self.evidence,
            "template_version": self.template_version,
        }


def _word_count(text: str) -> int:
    return len(text.split())


def render_tar(query: Triple, support: Sequence[Triple]) -> str:
    relation = normalize_label(query.relation)
    lines = [
        "You judge whether a fact fits the entity-type pattern of its relation.",
        f'Example facts using the relation "{relation}":',
    ]
    if support:
        lines.extend(linearize(t) for t in support)
    else:
        lines.append(NO_SUPPORT_CLAUSE)
    lines.append(f"Query fact: {linearize(query)}")
    lines.append(
        "Does the query fact connect the same kinds of entities as the example facts? "
        + ANSWER_INSTRUCTION
    )
    return "\n".join(lines)


def build_tar_prompt(
    query: Triple,
    support: Sequence[Triple],
    max_words: int | None = DEFAULT_WORD_BUDGET,
) -> PromptInstance:
    """Type-pattern judgment prompt: demonstration facts sharing the query's
    relation, then the query, then the Y/N instruction."""
    for t in support:
        if t.relation != query.relation:
            raise ValueError(
                f"support triple {t} does not share the query relation {query.relation!r}"
            )
    kept = list(support)
    if not kept:
        log.debug("TAR prompt for %s rendered without examples", query)
    text = render_tar(query, kept)
    dropped = 0
    while max_words is not None and _word_count(text) > max_words and kept:
        kept.pop()
        dropped += 1
        text = render_tar(query, kept)
    if dropped:
        log.warning("TAR prompt for %s over budget: dropped %d support facts", query, dropped)
    return PromptInstance(
        task=TASK_TAR,
        text=text,
        query=query,
        evidence={"support": [list(t) for t in kept]},
    )


def _no_facts_clause(entity: str) -> str:
    return f'No known facts about "{normalize_label(entity)}".'


def render_sr(
    query: Triple,
    paths: Sequence[ReasoningPath],
    head_facts: Sequence[tuple[Triple, float]],
    tail_facts: Sequence[tuple[Triple, float]],
) -> str:
    head = normalize_label(query.head)
    tail = normalize_label(query.tail)
    lines = [
        "You judge whether a query fact is supported by evidence from a knowledge graph.",
        f'Reasoning paths between "{head}" and "{tail}":',
    ]
    if paths:
        lines.extend(p.render() for p in paths)
    else:
        lines.append(NO_PATHS_CLAUSE)
    lines.append(f'Known facts about "{head}":')
    if head_facts:
        lines.extend(linearize(t) for t, _ in head_facts)
    else:
        lines.append(_no_facts_clause(query.head))
    lines.append(f'Known facts about "{tail}":')
    if tail_facts:
        lines.extend(linearize(t) for t, _ in tail_facts)
    else:
        lines.append(_no_facts_clause(query.tail))
    lines.append(f"Query fact: {linearize(query)}")
    lines.append(
        "Is the query fact supported by the reasoning paths and known facts above? "
        + ANSWER_INSTRUCTION
    )
    return "\n".join(lines)


def build_sr_prompt(
    query: Triple,
    paths: Sequence[ReasoningPath],
    neighbors: NeighborSet,
    max_words: int | None = DEFAULT_WORD_BUDGET,
) -> PromptInstance:
    """Subgraph judgment prompt: filtered paths ascending by degree, then
    per-side neighbor facts descending by similarity, then the query.

    Over-budget evidence is truncated lowest-priority-first: the globally
    least-similar neighbor facts go before the longest paths.
    """
    kept_paths = sorted(paths, key=lambda p: (p.degree, len(p.steps), p.sort_key()))
    head_facts = list(neighbors.head_facts)
    tail_facts = list(neighbors.tail_facts)

    text = render_sr(query, kept_paths, head_facts, tail_facts)
    dropped_facts = 0
    dropped_paths = 0
    while max_words is not None and _word_count(text) > max_words:
        if head_facts or tail_facts:
            # drop whichever side currently ends with the weaker similarity;
            # ties go to the tail side
            if not head_facts:
                tail_facts.pop()
            elif not tail_facts:
                head_facts.pop()
            elif head_facts[-1][1] < tail_facts[-1][1]:
                head_facts.pop()
            else:
                tail_facts.pop()
            dropped_facts += 1
        elif kept_paths:
            longest = max(
                range(len(kept_paths)),
                key=lambda i: (len(kept_paths[i].steps), kept_paths[i].degree, i),
            )
            kept_paths.pop(longest)
            dropped_paths += 1
        else:
            break
        text = render_sr(query, kept_paths, head_facts, tail_facts)
    if dropped_facts or dropped_paths:
        log.warning(
            "SR prompt for %s over budget: dropped %d neighbor facts, %d paths",
            query,
            dropped_facts,
            dropped_paths,
        )

    evidence = {
        "paths": [
            {
                "source": p.source,
                "steps": [[s.relation, s.target, s.inverted] for s in p.steps],
                "degree": p.degree,
            }
            for p in kept_paths
        ],
        "head_facts": [
            {"fact": list(t), "similarity": score} for t, score in head_facts
        ],
        "tail_facts": [
            {"fact": list(t), "similarity": score} for t, score in tail_facts
        ],
    }
    return PromptInstance(task=TASK_SR, text=text, query=query, evidence=evidence)
