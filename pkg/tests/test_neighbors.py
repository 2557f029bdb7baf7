from __future__ import annotations

import math
import random
import threading

import pytest

from triplerank.graph import Graph, Triple, linearize
from triplerank.neighbors import (
    CachedEmbedder,
    HashEmbedder,
    cosine,
    select_neighbors,
)

from conftest import build_random_graph


def oracle_cosine(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    return dot / (na * nb)


def test_cosine_identity_orthogonal_antipodal():
    assert cosine([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == pytest.approx(1.0)
    assert cosine([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0)
    assert cosine([1.0, -2.0], [-1.0, 2.0]) == pytest.approx(-1.0)


def test_cosine_errors():
    with pytest.raises(ValueError, match="zero-norm"):
        cosine([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(ValueError, match="dimension"):
        cosine([1.0], [1.0, 2.0])


def test_cosine_stays_clamped():
    rng = random.Random(1)
    for _ in range(200):
        a = [rng.uniform(-5, 5) for _ in range(8)]
        b = [rng.uniform(-5, 5) for _ in range(8)]
        got = cosine(a, b)
        assert -1.0 <= got <= 1.0
        assert got == pytest.approx(oracle_cosine(a, b), abs=1e-12)


def test_hash_embedder_deterministic_and_finite():
    emb = HashEmbedder(dim=32)
    texts = ["(a, likes, b)", "(c, likes, d)", "(a, likes, b)"]
    first = emb.embed(texts)
    second = emb.embed(texts)
    assert first == second
    assert first[0] == first[2]
    assert first[0] != first[1]
    assert all(math.isfinite(x) for vec in first for x in vec)
    assert any(x != 0 for x in first[0])


def test_cached_embedder_transparent_and_threadsafe():
    inner = HashEmbedder(dim=16)
    cached = CachedEmbedder(inner)
    texts = [f"(e{i}, r, e{i+1})" for i in range(50)]
    assert cached.embed(texts) == inner.embed(texts)

    results = []

    def worker():
        results.append(cached.embed(texts))

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(r == results[0] for r in results)


def test_select_neighbors_trivial_sizes():
    g = Graph([Triple("h", "r", "x"), Triple("y", "r", "t")])
    emb = HashEmbedder()
    empty = select_neighbors(g, Triple("h", "q", "t"), 0, emb)
    assert empty.head_facts == () and empty.tail_facts == ()

    single = select_neighbors(g, Triple("h", "q", "t"), 6, emb)
    assert [f for f, _ in single.head_facts] == [Triple("h", "r", "x")]
    assert [f for f, _ in single.tail_facts] == [Triple("y", "r", "t")]


def test_select_neighbors_excludes_query_and_unknown_entity():
    q = Triple("h", "r", "t")
    g = Graph([q, Triple("h", "r2", "z")])
    picked = select_neighbors(g, q, 6, HashEmbedder())
    assert all(f != q for f, _ in picked.head_facts)
    assert all(f != q for f, _ in picked.tail_facts)
    ghost = select_neighbors(g, Triple("nowhere", "r", "alsonot"), 6, HashEmbedder())
    assert ghost.head_facts == () and ghost.tail_facts == ()


def test_strict_orientation_restricts_slots():
    g = Graph(
        [
            Triple("h", "r1", "x"),
            Triple("x", "r2", "h"),
            Triple("y", "r3", "t"),
            Triple("t", "r4", "y"),
        ]
    )
    q = Triple("h", "q", "t")
    loose = select_neighbors(g, q, 6, HashEmbedder())
    assert len(loose.head_facts) == 2 and len(loose.tail_facts) == 2
    strict = select_neighbors(g, q, 6, HashEmbedder(), strict_orientation=True)
    assert [f for f, _ in strict.head_facts] == [Triple("h", "r1", "x")]
    assert [f for f, _ in strict.tail_facts] == [Triple("y", "r3", "t")]


def _oracle_side(g, entity, query, sigma, emb):
    incident = sorted(
        {t for t in g.triples if (t.head == entity or t.tail == entity) and t != query}
    )
    if not incident:
        return []
    qvec = emb.embed([linearize(query)])[0]
    scored = []
    for t in incident:
        vec = emb.embed([linearize(t)])[0]
        scored.append((t, oracle_cosine(qvec, vec)))
    scored.sort(key=lambda cs: (-cs[1], linearize(cs[0])))
    return scored[:sigma]


def test_matches_exhaustive_argmax_oracle():
    emb = HashEmbedder(dim=24)
    for seed in range(100):
        g = build_random_graph(seed, n_entities=10, n_relations=4, n_triples=40)
        rng = random.Random(seed)
        head, tail = rng.sample(g.entities, 2)
        query = Triple(head, rng.choice(g.relations), tail)
        got = select_neighbors(g, query, 3, emb)
        for side, entity in (("head_facts", head), ("tail_facts", tail)):
            expected = _oracle_side(g, entity, query, 3, emb)
            chosen = list(getattr(got, side))
            assert [f for f, _ in chosen] == [f for f, _ in expected]
            for (_, s_got), (_, s_exp) in zip(chosen, expected):
                assert s_got == pytest.approx(s_exp, abs=1e-12)


def test_scores_sorted_and_dominate_rejected():
    emb = HashEmbedder()
    g = build_random_graph(4, n_entities=8, n_relations=3, n_triples=30)
    query = Triple(g.entities[0], g.relations[0], g.entities[1])
    picked = select_neighbors(g, query, 2, emb)
    for side, entity in (("head_facts", query.head), ("tail_facts", query.tail)):
        chosen = list(getattr(picked, side))
        scores = [s for _, s in chosen]
        assert scores == sorted(scores, reverse=True)
        rejected = [
            t
            for t in g.incident(entity)
            if t != query and t not in [f for f, _ in chosen]
        ]
        if chosen and rejected:
            qvec = emb.embed([linearize(query)])[0]
            worst_kept = min(scores)
            best_rejected = max(
                cosine(qvec, emb.embed([linearize(t)])[0]) for t in rejected
            )
            assert worst_kept >= best_rejected - 1e-12


def test_invariant_to_index_iteration_order():
    facts = [
        Triple("h", "r1", "x"),
        Triple("h", "r2", "y"),
        Triple("z", "r3", "h"),
        Triple("a", "r1", "t"),
        Triple("t", "r2", "b"),
    ]
    emb = HashEmbedder()
    query = Triple("h", "q", "t")
    baseline = select_neighbors(Graph(facts), query, 2, emb)
    for seed in range(5):
        shuffled = facts[:]
        random.Random(seed).shuffle(shuffled)
        assert select_neighbors(Graph(shuffled), query, 2, emb) == baseline


def test_cache_layer_equals_uncached():
    g = build_random_graph(9, n_entities=9, n_relations=3, n_triples=35)
    query = Triple(g.entities[2], g.relations[1], g.entities[3])
    plain = select_neighbors(g, query, 4, HashEmbedder())
    cached = select_neighbors(g, query, 4, CachedEmbedder(HashEmbedder()))
    assert plain == cached
