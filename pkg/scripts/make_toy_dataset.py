#!/usr/bin/env python3
"""Generate the small synthetic dataset under data/toy.

Train and test graphs have disjoint entity sets; the query file holds four
50-candidate blocks whose positives are held out of the evidence graphs, so
an oracle scorer ranks every positive first.
"""

from __future__ import annotations

import random
import sys
from pathlib import Path


def chain_rows(prefix: str, n: int) -> list[tuple[str, str, str]]:
    rows = [(f"{prefix}{i}", "linked_to", f"{prefix}{i+1}") for i in range(n - 1)]
    rows += [(f"{prefix}{i}", "variant_of", f"{prefix}{i+2}") for i in range(n - 2)]
    rng = random.Random(f"toy:{prefix}")
    for _ in range(n // 2):
        a, b = rng.sample(range(n), 2)
        rows.append((f"{prefix}{a}", "related_to", f"{prefix}{b}"))
    return sorted(set(rows))


def block_rows(positive: tuple[str, str, str], corrupt: str, pool: list[str]):
    h, r, t = positive
    rows = [positive]
    fillers = [e for e in pool if e not in (h, t)][:49]
    for e in fillers:
        rows.append((h, r, e) if corrupt == "tail" else (e, r, t))
    assert len(rows) == 50, f"need 49 distinct fillers, got {len(rows) - 1}"
    return rows


def write(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for h, r, t in rows:
            f.write(f"{h}\t{r}\t{t}\n")
    print(f"wrote {len(rows):4d} rows -> {path}")


def main(out_dir: str = "data/toy") -> None:
    out = Path(out_dir)
    train_entities = 60
    test_entities = 60
    write(out / "train.tsv", chain_rows("alpha_", train_entities))
    write(out / "test-inductive.tsv", chain_rows("beta_", test_entities))

    test_pool = [f"beta_{i}" for i in range(test_entities)]
    queries = []
    queries += block_rows(("beta_0", "paired_with", "beta_5"), "tail", test_pool)
    queries += block_rows(("beta_10", "paired_with", "beta_3"), "head", test_pool)
    queries += block_rows(("beta_7", "paired_with", "beta_20"), "tail", test_pool)
    queries += block_rows(("beta_30", "paired_with", "beta_8"), "head", test_pool)
    write(out / "queries-inductive.tsv", queries)

    train_pool = [f"alpha_{i}" for i in range(train_entities)]
    tqueries = []
    tqueries += block_rows(("alpha_2", "paired_with", "alpha_9"), "tail", train_pool)
    tqueries += block_rows(("alpha_12", "paired_with", "alpha_4"), "head", train_pool)
    write(out / "queries-transductive.tsv", tqueries)


if __name__ == "__main__":
    main(*sys.argv[1:])
