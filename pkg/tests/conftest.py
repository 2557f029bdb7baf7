"""Shared fixtures: deterministic random graphs and toy split files."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from triplerank.graph import Graph, Triple


def build_random_graph(
    seed: int,
    n_entities: int = 12,
    n_relations: int = 4,
    n_triples: int = 30,
    name: str = "",
) -> Graph:
    rng = random.Random(seed)
    entities = [f"e{i}" for i in range(n_entities)]
    relations = [f"r{i}" for i in range(n_relations)]
    facts: set[Triple] = set()
    for _ in range(n_triples * 20):
        if len(facts) >= n_triples:
            break
        facts.add(Triple(rng.choice(entities), rng.choice(relations), rng.choice(entities)))
    return Graph(sorted(facts), name=name or f"random-{seed}")


def write_tsv(path: Path, rows: list[tuple[str, str, str]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for h, r, t in rows:
            f.write(f"{h}\t{r}\t{t}\n")
    return path


def make_query_rows(
    positive: tuple[str, str, str],
    n_negatives: int = 49,
    corrupt: str = "tail",
) -> list[tuple[str, str, str]]:
    h, r, t = positive
    rows = [positive]
    for j in range(n_negatives):
        if corrupt == "tail":
            rows.append((h, r, f"neg_{t}_{j}"))
        else:
            rows.append((f"neg_{h}_{j}", r, t))
    return rows


@pytest.fixture
def toy_split(tmp_path: Path) -> dict[str, Path]:
    """Small inductive bundle: chain-shaped train/test graphs with disjoint
    entities, plus two query blocks over test entities."""
    train_rows = [(f"a{i}", "linked to", f"a{i+1}") for i in range(10)]
    train_rows += [(f"a{i}", "variant of", f"a{i+2}") for i in range(8)]
    train_rows += [("a0", "target of", "a3"), ("a4", "target of", "a7")]

    test_rows = [(f"b{i}", "linked to", f"b{i+1}") for i in range(10)]
    test_rows += [(f"b{i}", "variant of", f"b{i+2}") for i in range(8)]

    query_rows = make_query_rows(("b0", "target of", "b3"), corrupt="tail")
    query_rows += make_query_rows(("b5", "target of", "b2"), corrupt="head")

    return {
        "train": write_tsv(tmp_path / "train.tsv", train_rows),
        "test": write_tsv(tmp_path / "test-inductive.tsv", test_rows),
        "queries": write_tsv(tmp_path / "queries-inductive.tsv", query_rows),
        "dir": tmp_path,
    }


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = []
    for status in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            if status in ("passed", "failed") and rep.when != "call":
                continue
            rows.append((nodeid.split("::")[-1], status.upper()))
    if rows:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, status in dict(rows).items():
            terminalreporter.write_line(f"{status:8s} {name}")
