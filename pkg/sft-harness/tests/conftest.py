"""Fixtures: synthetic separable instruction corpora."""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest


def separable_corpus_rows(n: int = 200, seed: int = 0) -> list[dict]:
    """Y/N is decidable from a status token inside the prompt, so a small
    model can fit it quickly."""
    rng = random.Random(seed)
    rows = []
    for i in range(n):
        positive = i % 2 == 0
        status = "ready" if positive else "broken"
        widget = f"widget_{rng.randrange(40)}"
        floor = f"floor_{rng.randrange(8)}"
        prompt = (
            "You judge whether a query fact is supported by evidence from a knowledge graph.\n"
            f"Known facts about \"{widget}\":\n"
            f"({widget}, status, {status})\n"
            f"Query fact: ({widget}, operational on, {floor})\n"
            "Is the query fact supported by the known facts above? Answer with Y or N."
        )
        rows.append(
            {
                "task": "SR",
                "prompt": prompt,
                "label": "Y" if positive else "N",
                "meta": {"source": [widget, "operational on", floor], "corruption": "none"},
            }
        )
    return rows


def write_corpus(path: Path, rows: list[dict]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True) + "\n")
    return path


@pytest.fixture
def separable_corpus(tmp_path) -> Path:
    return write_corpus(tmp_path / "corpus.jsonl", separable_corpus_rows())
