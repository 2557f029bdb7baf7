"""In-memory triple store: split loading, interning, adjacency indexes.

Entity identity is the surface label string after trimming. Labels are kept
raw internally; underscore-to-space normalization happens only when a triple
is linearized to text.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

log = logging.getLogger(__name__)

HEAD_CORRUPTED = "head-corrupted"
TAIL_CORRUPTED = "tail-corrupted"

CANDIDATES_PER_BLOCK = 50


class TripleFileError(ValueError):
    """Malformed triple or query-block file."""


class Triple(NamedTuple):
    head: str
    relation: str
    tail: str


def normalize_label(label: str) -> str:
    return label.replace("_", " ")


def linearize(t: Triple) -> str:
    """Render a triple as ``(head, relation, tail)`` with normalized labels."""
    return f"({normalize_label(t.head)}, {normalize_label(t.relation)}, {normalize_label(t.tail)})"


class GraphStats(NamedTuple):
    relations: int
    entities: int
    triples: int


class Graph:
    """Immutable deduplicated triple set with interned vocabularies.

    Entities and relations get dense integer handles in order of first
    appearance; adjacency indexes (by head, by tail, by relation) are built
    once and never mutated, so a Graph is safe to share across threads.
    """

    def __init__(self, facts: Iterable[Triple], name: str = ""):
        self.name = name
        self._entity_ids: dict[str, int] = {}
        self._entity_labels: list[str] = []
        self._relation_ids: dict[str, int] = {}
        self._relation_labels: list[str] = []

        triples: list[Triple] = []
        seen: set[Triple] = set()
        dropped = 0
        for fact in facts:
            t = Triple(*fact)
            if t in seen:
                dropped += 1
                continue
            seen.add(t)
            triples.append(t)
            self._intern_entity(t.head)
            self._intern_entity(t.tail)
            self._intern_relation(t.relation)
        self.triples: tuple[Triple, ...] = tuple(triples)
        self._triple_set = frozenset(triples)
        self.duplicates_dropped = dropped

        by_head: dict[str, list[Triple]] = {}
        by_tail: dict[str, list[Triple]] = {}
        by_relation: dict[str, list[Triple]] = {}
        for t in self.triples:
            by_head.setdefault(t.head, []).append(t)
            by_tail.setdefault(t.tail, []).append(t)
            by_relation.setdefault(t.relation, []).append(t)
        # sorted adjacency keeps every downstream iteration order-independent
        # of input file order
        self._by_head = {k: tuple(sorted(v)) for k, v in by_head.items()}
        self._by_tail = {k: tuple(sorted(v)) for k, v in by_tail.items()}
        self._by_relation = {k: tuple(sorted(v)) for k, v in by_relation.items()}

    def _intern_entity(self, label: str) -> int:
        eid = self._entity_ids.get(label)
        if eid is None:
            eid = len(self._entity_labels)
            self._entity_ids[label] = eid
            self._entity_labels.append(label)
        return eid

    def _intern_relation(self, label: str) -> int:
        rid = self._relation_ids.get(label)
        if rid is None:
            rid = len(self._relation_labels)
            self._relation_ids[label] = rid
            self._relation_labels.append(label)
        return rid

    # vocabulary access

    @property
    def entities(self) -> tuple[str, ...]:
        return tuple(self._entity_labels)

    @property
    def relations(self) -> tuple[str, ...]:
        return tuple(self._relation_labels)

    def entity_id(self, label: str) -> int:
        return self._entity_ids[label]

    def entity_label(self, eid: int) -> str:
        return self._entity_labels[eid]

    def relation_id(self, label: str) -> int:
        return self._relation_ids[label]

    def relation_label(self, rid: int) -> str:
        return self._relation_labels[rid]

    def has_entity(self, label: str) -> bool:
        return label in self._entity_ids

    def has_relation(self, label: str) -> bool:
        return label in self._relation_ids

    # triple access

    def __contains__(self, t: Triple) -> bool:
        return t in self._triple_set

    def __len__(self) -> int:
        return len(self.triples)

    def outgoing(self, entity: str) -> tuple[Triple, ...]:
        return self._by_head.get(entity, ())

    def incoming(self, entity: str) -> tuple[Triple, ...]:
        return self._by_tail.get(entity, ())

    def incident(self, entity: str) -> tuple[Triple, ...]:
        """Triples containing the entity as head or tail, deduplicated."""
        out = self.outgoing(entity)
        inc = self.incoming(entity)
        if not inc:
            return out
        if not out:
            return inc
        return tuple(sorted(set(out) | set(inc)))

    def triples_with_relation(self, relation: str) -> tuple[Triple, ...]:
        return self._by_relation.get(relation, ())

    def occurrence(self, relation: str) -> int:
        return len(self._by_relation.get(relation, ()))

    def occurrence_table(self) -> dict[str, int]:
        return {r: len(ts) for r, ts in sorted(self._by_relation.items())}

    def stats(self) -> GraphStats:
        return GraphStats(
            relations=len(self._relation_labels),
            entities=len(self._entity_labels),
            triples=len(self.triples),
        )

    def __repr__(self) -> str:
        s = self.stats()
        tag = f" {self.name!r}" if self.name else ""
        return f"<Graph{tag} |R|={s.relations} |E|={s.entities} |T|={s.triples}>"


def _parse_triple_line(line: str, path: str, lineno: int) -> Triple:
    fields = line.split("\t")
    if len(fields) != 3:
        raise TripleFileError(
            f"{path}:{lineno}: expected 3 tab-separated fields, got {len(fields)}"
        )
    head, relation, tail = (f.strip() for f in fields)
    if not head or not relation or not tail:
        raise TripleFileError(f"{path}:{lineno}: empty label after trimming")
    return Triple(head, relation, tail)


def read_triples(path: str | Path) -> list[Triple]:
    """Parse a triple TSV file; may contain duplicates."""
    triples = []
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            triples.append(_parse_triple_line(line, str(path), lineno))
    return triples


def load_graph(path: str | Path, name: str = "") -> Graph:
    """Load a triple TSV split into a deduplicated Graph.

    An empty file yields an empty Graph; a line with the wrong arity raises
    TripleFileError with the offending line number.
    """
    g = Graph(read_triples(path), name=name or Path(path).stem)
    s = g.stats()
    log.info(
        "loaded %s: |R|=%d |E|=%d |T|=%d", g.name, s.relations, s.entities, s.triples
    )
    if g.duplicates_dropped:
        log.info("%s: dropped %d duplicate triples", g.name, g.duplicates_dropped)
    return g


def check_inductive_disjointness(train: Graph, test: Graph) -> bool:
    """True iff train and test entity-label sets are disjoint.

    Test relations missing from the train vocabulary are logged as a warning
    but do not affect the result.
    """
    overlap = set(train.entities) & set(test.entities)
    unseen_relations = set(test.relations) - set(train.relations)
    if unseen_relations:
        log.warning(
            "%d test relations absent from train graph: %s",
            len(unseen_relations),
            ", ".join(sorted(unseen_relations)[:5]),
        )
    if overlap:
        log.info("train/test entity overlap: %d shared labels", len(overlap))
    return not overlap


@dataclass(frozen=True)
class QueryBlock:
    """One positive triple plus its 49 corrupted candidates."""

    positive: Triple
    negatives: tuple[Triple, ...]
    direction: str  # HEAD_CORRUPTED | TAIL_CORRUPTED

    @property
    def candidates(self) -> tuple[Triple, ...]:
        return (self.positive,) + self.negatives


def _infer_direction(positive: Triple, negatives: Sequence[Triple], where: str) -> str:
    tail_varies = all(
        n.head == positive.head and n.relation == positive.relation for n in negatives
    )
    head_varies = all(
        n.tail == positive.tail and n.relation == positive.relation for n in negatives
    )
    if tail_varies and not head_varies:
        return TAIL_CORRUPTED
    if head_varies and not tail_varies:
        return HEAD_CORRUPTED
    raise TripleFileError(f"{where}: cannot infer corruption direction (both or neither slot varies)")


def load_query_blocks(path: str | Path) -> list[QueryBlock]:
    """Load 50-line candidate blocks; the first line of each block is positive."""
    triples = read_triples(path)
    if len(triples) % CANDIDATES_PER_BLOCK != 0:
        raise TripleFileError(
            f"{path}: {len(triples)} candidate lines is not a multiple of {CANDIDATES_PER_BLOCK}"
        )
    blocks = []
    for start in range(0, len(triples), CANDIDATES_PER_BLOCK):
        chunk = triples[start : start + CANDIDATES_PER_BLOCK]
        where = f"{path}: block starting at candidate {start + 1}"
        if len(set(chunk)) != len(chunk):
            raise TripleFileError(f"{where}: duplicate candidates within block")
        positive, negatives = chunk[0], tuple(chunk[1:])
        direction = _infer_direction(positive, negatives, where)
        blocks.append(QueryBlock(positive=positive, negatives=negatives, direction=direction))
    log.info("loaded %d query blocks from %s", len(blocks), path)
    return blocks


@dataclass
class SplitBundle:
    """A training graph plus optional test graph and query blocks."""

    train: Graph
    test: Graph | None = None
    queries: list[QueryBlock] = field(default_factory=list)

    def evidence_graph(self, setting: str) -> Graph:
        if setting == "inductive":
            if self.test is None:
                raise ValueError("inductive evaluation requires a test graph")
            return self.test
        if setting == "transductive":
            return self.train
        raise ValueError(f"unknown setting {setting!r}")


def sample_relation_support(
    g: Graph,
    relation: str,
    exclude: set[str],
    k: int,
    seed: int | str = 0,
) -> list[Triple]:
    """Sample up to k triples with the given relation, skipping any triple
    whose head or tail is in `exclude`. Deterministic under the seed."""
    if k < 0:
        raise ValueError("k must be >= 0")
    eligible = [
        t
        for t in g.triples_with_relation(relation)
        if t.head not in exclude and t.tail not in exclude
    ]
    if len(eligible) <= k:
        return eligible
    return random.Random(f"support:{seed}").sample(eligible, k)
