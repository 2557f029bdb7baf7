"""Reasoning-path enumeration and degree-based filtering.

A reasoning path connects a query's head to its tail through evidence-graph
edges, traversed in either orientation, never using the query relation and
never revisiting an entity. A path's degree is the sum of its step relations'
occurrence counts; rarer relations make more informative paths, so filtering
keeps the lowest-degree ones.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

from .graph import Graph, Triple, normalize_label

log = logging.getLogger(__name__)

DEFAULT_MAX_PATH_LEN = 3
DEFAULT_MAX_PATHS = 1000


class PathStep(NamedTuple):
    relation: str
    target: str
    inverted: bool  # True when the underlying triple was traversed tail-to-head


@dataclass(frozen=True)
class ReasoningPath:
    source: str
    steps: tuple[PathStep, ...]
    degree: int

    @property
    def target(self) -> str:
        return self.steps[-1].target

    def __len__(self) -> int:
        return len(self.steps)

    def sort_key(self) -> tuple:
        return tuple((s.relation, s.inverted, s.target) for s in self.steps)

    def serialize(self) -> str:
        """Provenance record: ``h -[r1]-> e1 -[inv r2]-> t (degree=D)``."""
        parts = [self.source]
        for s in self.steps:
            rel = f"inv {s.relation}" if s.inverted else s.relation
            parts.append(f"-[{rel}]-> {s.target}")
        return " ".join(parts) + f" (degree={self.degree})"

    def render(self) -> str:
        """Natural-language form used inside prompts, with normalized labels."""
        parts = [normalize_label(self.source)]
        for s in self.steps:
            rel = normalize_label(s.relation)
            if s.inverted:
                rel = f"inverse of {rel}"
            parts.append(f"-[{rel}]-> {normalize_label(s.target)}")
        return " ".join(parts)


def _expansions(g: Graph, entity: str, banned_relation: str) -> list[PathStep]:
    steps = [
        PathStep(t.relation, t.tail, False)
        for t in g.outgoing(entity)
        if t.relation != banned_relation
    ]
    steps += [
        PathStep(t.relation, t.head, True)
        for t in g.incoming(entity)
        if t.relation != banned_relation
    ]
    return sorted(steps)


def extract_paths(
    evidence: Graph,
    head: str,
    tail: str,
    query_relation: str,
    max_len: int = DEFAULT_MAX_PATH_LEN,
    occ: Mapping[str, int] | None = None,
    max_paths: int = DEFAULT_MAX_PATHS,
    bidirectional: bool = True,
) -> list[ReasoningPath]:
    """Breadth-first enumeration of all simple paths from head to tail.

    Paths have length <= max_len, use edges in both orientations (unless
    bidirectional=False), exclude every step whose relation equals the query
    relation, and never repeat an entity. Output is sorted lexicographically
    by step sequence. Unknown head or tail yields an empty list (an unseen
    entity simply has no path context). Enumeration stops at max_paths raw
    paths as a blowup guard.
    """
    if head == tail:
        raise ValueError("path extraction requires distinct head and tail")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    if not evidence.has_entity(head) or not evidence.has_entity(tail):
        return []
    if occ is None:
        occ = evidence.occurrence_table()

    found: list[tuple[PathStep, ...]] = []
    queue: deque[tuple[str, tuple[PathStep, ...], frozenset[str]]] = deque()
    queue.append((head, (), frozenset((head,))))
    truncated = False
    while queue and not truncated:
        node, steps, visited = queue.popleft()
        for step in _expansions(evidence, node, query_relation):
            if not bidirectional and step.inverted:
                continue
            if step.target == tail:
                found.append(steps + (step,))
                if len(found) >= max_paths:
                    truncated = True
                    break
            elif step.target not in visited and len(steps) + 1 < max_len:
                queue.append((step.target, steps + (step,), visited | {step.target}))
    if truncated:
        log.warning(
            "path enumeration for (%s, %s) capped at %d raw paths", head, tail, max_paths
        )

    paths = [
        ReasoningPath(
            source=head,
            steps=steps,
            degree=sum(occ.get(s.relation, 0) for s in steps),
        )
        for steps in found
    ]
    paths.sort(key=ReasoningPath.sort_key)
    return paths


def path_degree(path: ReasoningPath, occ: Mapping[str, int]) -> int:
    """Sum of step-relation occurrence counts, counting repeats per hop.

    Relations absent from the table count as zero occurrences.
    """
    return sum(occ.get(s.relation, 0) for s in path.steps)


def filter_paths(paths: Sequence[ReasoningPath], budget: int) -> list[ReasoningPath]:
    """Keep the `budget` lowest-degree paths.

    Ties break toward shorter paths, then lexicographic step order; the
    result is sorted ascending by (degree, length, step sequence).
    """
    if budget < 0:
        raise ValueError("budget must be >= 0")
    ordered = sorted(paths, key=lambda p: (p.degree, len(p.steps), p.sort_key()))
    return ordered[:budget]


def replay_path(path: ReasoningPath, g: Graph) -> bool:
    """Check that every step's underlying triple exists in g in its stored
    orientation; used by provenance assertions."""
    node = path.source
    for s in path.steps:
        triple = Triple(s.target, s.relation, node) if s.inverted else Triple(node, s.relation, s.target)
        if triple not in g:
            return False
        node = s.target
    return True
