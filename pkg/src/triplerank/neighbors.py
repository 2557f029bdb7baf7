"""Neighboring-fact selection by embedding similarity to the query triple."""

from __future__ import annotations

import hashlib
import logging
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import httpx
import numpy as np

from .graph import Graph, Triple, linearize

log = logging.getLogger(__name__)

EMBED_BATCH_SIZE = 64


class EmbeddingError(RuntimeError):
    """Embedding backend failure after retries."""


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    """Standard cosine similarity, clamped to [-1, 1] against rounding."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero-norm vector")
    return float(min(1.0, max(-1.0, float(va @ vb) / (na * nb))))


class Embedder(ABC):
    """Maps texts to fixed-dimension vectors; same text, same vector."""

    name: str
    dim: int

    @abstractmethod
    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        ...


class HashEmbedder(Embedder):
    """Deterministic test embedder: a token-hash bag projected to `dim`.

    No model weights, no network; identical across platforms and runs, which
    is what the property suites need.
    """

    def __init__(self, dim: int = 64):
        self.dim = dim
        self.name = f"hash-{dim}"

    def _embed_one(self, text: str) -> list[float]:
        vec = [0.0] * self.dim
        for token in text.split():
            data = token.encode("utf-8")
            for salt in (b"a:", b"b:"):
                digest = hashlib.sha256(salt + data).digest()
                vec[int.from_bytes(digest[:8], "big") % self.dim] += 1.0
        return vec

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        return [self._embed_one(t) for t in texts]


class RemoteEmbedder(Embedder):
    """Client for a JSON-over-HTTP embedding service.

    Speaks the common embeddings contract: POST {model, input: [texts]} ->
    {data: [{embedding: [...]}]}. Requests are batched up to 64 texts.
    """

    def __init__(
        self,
        endpoint: str,
        model: str = "bge-small-en-v1.5",
        client: httpx.Client | None = None,
        timeout: float = 30.0,
        retries: int = 3,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.name = f"remote:{model}"
        self.dim = -1  # learned from the first response
        self.retries = retries
        self._client = client or httpx.Client(timeout=timeout)

    def _post(self, batch: Sequence[str]) -> list[list[float]]:
        payload = {"model": self.model, "input": list(batch)}
        last: Exception | None = None
        for attempt in range(self.retries):
            try:
                resp = self._client.post(f"{self.endpoint}/embeddings", json=payload)
                resp.raise_for_status()
                data = resp.json()["data"]
                return [row["embedding"] for row in data]
            except (httpx.HTTPError, KeyError, ValueError) as exc:
                last = exc
                log.warning("embedding request failed (attempt %d): %s", attempt + 1, exc)
        raise EmbeddingError(f"embedding service failed after {self.retries} attempts: {last}")

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        out: list[list[float]] = []
        for start in range(0, len(texts), EMBED_BATCH_SIZE):
            vectors = self._post(texts[start : start + EMBED_BATCH_SIZE])
            if vectors and self.dim < 0:
                self.dim = len(vectors[0])
            out.extend(vectors)
        if len(out) != len(texts):
            raise EmbeddingError(f"service returned {len(out)} vectors for {len(texts)} texts")
        return out


class CachedEmbedder(Embedder):
    """Caching layer keyed by (model name, exact text); thread-safe."""

    def __init__(self, inner: Embedder):
        self.inner = inner
        self.name = inner.name
        self._cache: dict[str, list[float]] = {}
        self._lock = threading.Lock()

    @property
    def dim(self) -> int:  # type: ignore[override]
        return self.inner.dim

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        with self._lock:
            missing = [t for t in dict.fromkeys(texts) if t not in self._cache]
        if missing:
            fresh = self.inner.embed(missing)
            with self._lock:
                self._cache.update(zip(missing, fresh))
        with self._lock:
            return [self._cache[t] for t in texts]


@dataclass(frozen=True)
class NeighborSet:
    """Top facts incident to the query head and tail, scored by similarity."""

    query: Triple
    head_facts: tuple[tuple[Triple, float], ...]
    tail_facts: tuple[tuple[Triple, float], ...]


def _select_side(
    candidates: Sequence[Triple],
    query_text: str,
    sigma: int,
    embedder: Embedder,
) -> tuple[tuple[Triple, float], ...]:
    if sigma == 0 or not candidates:
        return ()
    texts = [query_text] + [linearize(c) for c in candidates]
    vectors = embedder.embed(texts)
    query_vec = vectors[0]
    scored = [
        (cand, cosine(query_vec, vec)) for cand, vec in zip(candidates, vectors[1:])
    ]
    scored.sort(key=lambda cs: (-cs[1], linearize(cs[0])))
    return tuple(scored[:sigma])


def select_neighbors(
    evidence: Graph,
    query: Triple,
    sigma: int,
    embedder: Embedder,
    strict_orientation: bool = False,
) -> NeighborSet:
    """Pick the sigma incident facts per side with the highest cosine
    similarity between their linearized text and the linearized query.

    By default facts where the entity appears in either slot are eligible;
    strict_orientation restricts the head side to facts headed by the query
    head and the tail side to facts ending at the query tail. The query
    triple itself is never eligible. Ties break lexicographically by
    linearized fact, so results do not depend on index iteration order.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if strict_orientation:
        head_cands = evidence.outgoing(query.head)
        tail_cands = evidence.incoming(query.tail)
    else:
        head_cands = evidence.incident(query.head)
        tail_cands = evidence.incident(query.tail)
    head_cands = [t for t in head_cands if t != query]
    tail_cands = [t for t in tail_cands if t != query]
    query_text = linearize(query)
    return NeighborSet(
        query=query,
        head_facts=_select_side(head_cands, query_text, sigma, embedder),
        tail_facts=_select_side(tail_cands, query_text, sigma, embedder),
    )
