"""Wiring between the evidence graph, prompt construction, and scorers."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

from .graph import Graph, Triple, sample_relation_support
from .neighbors import Embedder, NeighborSet, select_neighbors
from .paths import extract_paths, filter_paths
from .prompts import (
    DEFAULT_WORD_BUDGET,
    PromptInstance,
    build_sr_prompt,
    build_tar_prompt,
)
from .scoring import MODE_FULL, MODE_SR, MODE_TAR, ScoreCache, ScoredCandidate, Scorer

log = logging.getLogger(__name__)

SUPPORT_EXCLUDE_CHOICES = ("both", "head", "tail", "none")


@dataclass
class PipelineContext:
    """Everything rank_block needs to turn a candidate triple into a score.

    The evidence graph is the test graph in inductive evaluation and the
    train graph in transductive evaluation; `occ` is the relation-occurrence
    table used for path degrees, which may come from a different graph than
    the evidence when degree counting is forced to the training split.
    """

    evidence: Graph
    scorer: Scorer
    embedder: Embedder | None = None
    occ: Mapping[str, int] | None = None
    max_path_len: int = 3
    path_budget: int = 6
    neighbor_budget: int = 6
    support_size: int = 3
    support_exclude: str = "both"
    strict_neighbor_orientation: bool = False
    bidirectional_paths: bool = True
    prompt_word_budget: int = DEFAULT_WORD_BUDGET
    seed: int = 0
    evidence_tag: str = "test"
    score_cache: ScoreCache | None = None

    def __post_init__(self) -> None:
        if self.occ is None:
            self.occ = self.evidence.occurrence_table()
        if self.support_exclude not in SUPPORT_EXCLUDE_CHOICES:
            raise ValueError(f"support_exclude must be one of {SUPPORT_EXCLUDE_CHOICES}")

    def _exclusion_set(self, query: Triple) -> set[str]:
        if self.support_exclude == "both":
            return {query.head, query.tail}
        if self.support_exclude == "head":
            return {query.head}
        if self.support_exclude == "tail":
            return {query.tail}
        return set()

    def tar_prompt(self, query: Triple) -> PromptInstance:
        support = sample_relation_support(
            self.evidence,
            query.relation,
            exclude=self._exclusion_set(query),
            k=self.support_size,
            seed=f"{self.seed}:{query.head}|{query.relation}|{query.tail}",
        )
        return build_tar_prompt(query, support, max_words=self.prompt_word_budget)

    def sr_evidence(self, query: Triple) -> tuple[list, NeighborSet]:
        if query.head == query.tail:
            paths = []
        else:
            paths = filter_paths(
                extract_paths(
                    self.evidence,
                    query.head,
                    query.tail,
                    query.relation,
                    max_len=self.max_path_len,
                    occ=self.occ,
                    bidirectional=self.bidirectional_paths,
                ),
                self.path_budget,
            )
        if self.embedder is None:
            raise ValueError("SR prompts require an embedder")
        neighbors = select_neighbors(
            self.evidence,
            query,
            self.neighbor_budget,
            self.embedder,
            strict_orientation=self.strict_neighbor_orientation,
        )
        return paths, neighbors

    def sr_prompt(self, query: Triple) -> PromptInstance:
        paths, neighbors = self.sr_evidence(query)
        return build_sr_prompt(query, paths, neighbors, max_words=self.prompt_word_budget)

    def _score_prompt(self, prompt: PromptInstance) -> float:
        if self.score_cache is None:
            return self.scorer.score_yes(prompt)
        key = ScoreCache.key(self.scorer.name, prompt.template_version, prompt.sha())
        cached = self.score_cache.get(key)
        if cached is not None:
            return cached
        p = self.scorer.score_yes(prompt)
        self.score_cache.put(key, p)
        return p

    def score_candidate(self, candidate: Triple, mode: str) -> ScoredCandidate:
        p_tar = self._score_prompt(self.tar_prompt(candidate)) if mode in (MODE_TAR, MODE_FULL) else None
        p_sr = self._score_prompt(self.sr_prompt(candidate)) if mode in (MODE_SR, MODE_FULL) else None
        return ScoredCandidate.combine(candidate, p_tar, p_sr)


def check_evidence_membership(prompt: PromptInstance, g: Graph) -> None:
    """Raise if any evidence item in the prompt is not backed by g.

    This is the provenance guard: training evidence must come from the
    training graph and inductive evaluation evidence from the test graph.
    """
    from .paths import PathStep, ReasoningPath, replay_path

    if prompt.task == "TAR":
        for fact in prompt.evidence["support"]:
            if Triple(*fact) not in g:
                raise ValueError(f"support fact {fact} not present in graph {g.name!r}")
        return
    for entry in prompt.evidence["paths"]:
        path = ReasoningPath(
            source=entry["source"],
            steps=tuple(PathStep(r, t, inv) for r, t, inv in entry["steps"]),
            degree=entry["degree"],
        )
        if not replay_path(path, g):
            raise ValueError(f"path {path.serialize()} does not replay in graph {g.name!r}")
    for side in ("head_facts", "tail_facts"):
        for entry in prompt.evidence[side]:
            if Triple(*entry["fact"]) not in g:
                raise ValueError(f"neighbor fact {entry['fact']} not present in graph {g.name!r}")
