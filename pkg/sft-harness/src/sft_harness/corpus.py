"""Instruction-corpus loading: JSON lines of {task, prompt, label, meta}."""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

log = logging.getLogger(__name__)

VALID_LABELS = ("Y", "N")


class CorpusError(ValueError):
    """Corpus file missing, empty, or malformed."""


@dataclass(frozen=True)
class InstructionRecord:
    task: str
    prompt: str
    label: str
    meta: dict


def load_corpus(path: str | Path) -> list[InstructionRecord]:
    """Parse and validate an instruction corpus; labels must be Y or N."""
    p = Path(path)
    if not p.exists():
        raise CorpusError(f"corpus file not found: {p}")
    records = []
    with open(p, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{p}:{lineno}: invalid JSON: {exc}") from exc
            for key in ("task", "prompt", "label"):
                if key not in row:
                    raise CorpusError(f"{p}:{lineno}: missing field {key!r}")
            if row["label"] not in VALID_LABELS:
                raise CorpusError(
                    f"{p}:{lineno}: label must be one of {VALID_LABELS}, got {row['label']!r}"
                )
            if not row["prompt"].strip():
                raise CorpusError(f"{p}:{lineno}: empty prompt")
            records.append(
                InstructionRecord(
                    task=row["task"],
                    prompt=row["prompt"],
                    label=row["label"],
                    meta=row.get("meta", {}),
                )
            )
    if not records:
        raise CorpusError(f"corpus is empty: {p}")
    log.info("loaded %d instruction records from %s", len(records), p)
    return records


def label_balance(records: list[InstructionRecord]) -> dict[str, int]:
    return dict(Counter(r.label for r in records))
