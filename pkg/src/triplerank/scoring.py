"""Candidate scoring: pluggable Y-probability scorers, ensembling, ranking."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import httpx

from .graph import QueryBlock, Triple, linearize
from .prompts import PromptInstance

if TYPE_CHECKING:
    from .pipeline import PipelineContext

log = logging.getLogger(__name__)

MODE_TAR = "TAR"
MODE_SR = "SR"
MODE_FULL = "FULL"
MODES = (MODE_TAR, MODE_SR, MODE_FULL)

FALLBACK_PROBABILITY = 0.5


class ScoringError(RuntimeError):
    """Scorer failure after bounded retries."""


class Scorer(ABC):
    """Turns a prompt into the probability that the answer token is 'Y'."""

    name: str
    kind: str

    @abstractmethod
    def score_yes(self, prompt: PromptInstance) -> float:
        ...


class OracleScorer(Scorer):
    """Knows the set of true triples; 1.0 if the prompt's query is one of
    them, else 0.0. Used to exercise the pipeline end to end."""

    kind = "oracle-mock"

    def __init__(self, truth: set[Triple]):
        self.truth = frozenset(truth)
        self.name = "oracle"

    def score_yes(self, prompt: PromptInstance) -> float:
        return 1.0 if prompt.query in self.truth else 0.0


class ConstantScorer(Scorer):
    kind = "constant-mock"

    def __init__(self, value: float = 0.5):
        if not 0.0 <= value <= 1.0:
            raise ValueError("constant probability must lie in [0, 1]")
        self.value = value
        self.name = f"constant-{value}"

    def score_yes(self, prompt: PromptInstance) -> float:
        return self.value


class RandomScorer(Scorer):
    """Uniform pseudo-random probability, a pure function of (seed, prompt
    text), so identical prompts score identically regardless of call order."""

    kind = "random-mock"

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.name = f"random-{seed}"

    def score_yes(self, prompt: PromptInstance) -> float:
        digest = hashlib.sha256(f"{self.seed}:{prompt.text}".encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") / 2**64


def renormalize_yes_no(
    top_logprobs: Sequence[tuple[str, float]],
    raw_probability: bool = False,
) -> tuple[float, bool]:
    """Turn first-token log-probabilities into a Y-probability.

    Default renormalizes the 'Y' mass over {'Y', 'N'}; raw_probability
    returns exp(logprob('Y')) directly. A label missing from the candidates
    is bounded by the lowest returned logprob; if neither label appears the
    fallback probability is returned with a flag.
    """
    best: dict[str, float] = {}
    for token, logprob in top_logprobs:
        label = token.strip()
        if label in ("Y", "N"):
            best[label] = max(best.get(label, -math.inf), logprob)
    if not best:
        return FALLBACK_PROBABILITY, True
    floor = min(lp for _, lp in top_logprobs)
    lp_y = best.get("Y", floor)
    lp_n = best.get("N", floor)
    if raw_probability:
        return (math.exp(lp_y) if "Y" in best else 0.0), False
    return 1.0 / (1.0 + math.exp(lp_n - lp_y)), False


class RemoteScorer(Scorer):
    """Client for a chat-completions endpoint that returns first-token
    log-probabilities.

    One generated token is requested with top-K candidates (K >= 5); the
    Y-probability comes from renormalize_yes_no. Transport failures retry
    with backoff, then raise ScoringError. Prompts whose top-K contains
    neither label score the fallback probability and bump fallback_count.
    """

    kind = "remote-llm"

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        client: httpx.Client | None = None,
        top_k: int = 5,
        retries: int = 3,
        timeout: float = 60.0,
        raw_probability: bool = False,
        backoff: float = 0.5,
    ):
        if top_k < 5:
            raise ValueError("top_k must be >= 5")
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.name = f"remote:{model}"
        self.top_k = top_k
        self.retries = retries
        self.raw_probability = raw_probability
        self.backoff = backoff
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = client or httpx.Client(timeout=timeout, headers=headers)
        self.fallback_count = 0
        self._lock = threading.Lock()

    def _request(self, prompt_text: str) -> list[tuple[str, float]]:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt_text}],
            "max_tokens": 1,
            "temperature": 0,
            "logprobs": True,
            "top_logprobs": self.top_k,
        }
        last: Exception | None = None
        for attempt in range(self.retries):
            try:
                resp = self._client.post(f"{self.endpoint}/chat/completions", json=payload)
                resp.raise_for_status()
                body = resp.json()
                first = body["choices"][0]["logprobs"]["content"][0]
                candidates = [(c["token"], float(c["logprob"])) for c in first["top_logprobs"]]
                if "token" in first and "logprob" in first:
                    candidates.append((first["token"], float(first["logprob"])))
                return candidates
            except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
                last = exc
                log.warning("scorer request failed (attempt %d/%d): %s", attempt + 1, self.retries, exc)
                if attempt + 1 < self.retries:
                    time.sleep(self.backoff * 2**attempt)
        raise ScoringError(f"scoring endpoint failed after {self.retries} attempts: {last}")

    def score_yes(self, prompt: PromptInstance) -> float:
        candidates = self._request(prompt.text)
        p, fell_back = renormalize_yes_no(candidates, raw_probability=self.raw_probability)
        if fell_back:
            with self._lock:
                self.fallback_count += 1
            log.warning("neither 'Y' nor 'N' among top-%d tokens; scoring %.1f", self.top_k, p)
        return p


def ensemble_score(p_tar: float, p_sr: float) -> float:
    """Mean of the two module probabilities."""
    for p in (p_tar, p_sr):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability {p} outside [0, 1]")
    return (p_tar + p_sr) / 2.0


@dataclass(frozen=True)
class ScoredCandidate:
    candidate: Triple
    p_tar: float | None
    p_sr: float | None
    score: float

    @staticmethod
    def combine(candidate: Triple, p_tar: float | None, p_sr: float | None) -> "ScoredCandidate":
        if p_tar is not None and p_sr is not None:
            score = ensemble_score(p_tar, p_sr)
        elif p_tar is not None:
            score = p_tar
        elif p_sr is not None:
            score = p_sr
        else:
            raise ValueError("at least one module probability is required")
        return ScoredCandidate(candidate, p_tar, p_sr, score)


@dataclass(frozen=True)
class RankedBlock:
    block: QueryBlock
    scored: tuple[ScoredCandidate, ...]
    rank_of_positive: int


def rank_block(block: QueryBlock, mode: str, ctx: "PipelineContext") -> RankedBlock:
    """Score all 50 candidates under the mode and rank them descending.

    Ties are resolved pessimistically for the positive: it ranks below every
    equal-scored negative; equal-scored negatives order lexicographically.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    scored = [ctx.score_candidate(cand, mode) for cand in block.candidates]
    positive = block.positive
    ordered = sorted(
        scored,
        key=lambda sc: (-sc.score, sc.candidate == positive, linearize(sc.candidate)),
    )
    pos_score = scored[0].score
    rank = (
        1
        + sum(1 for sc in scored if sc.score > pos_score)
        + sum(1 for sc in scored if sc.candidate != positive and sc.score == pos_score)
    )
    assert ordered[rank - 1].candidate == positive
    return RankedBlock(block=block, scored=tuple(ordered), rank_of_positive=rank)


class ScoreCache:
    """Per-candidate probability cache keyed by (scorer, template version,
    prompt hash), optionally persisted as append-only JSON lines so
    interrupted runs resume where they stopped."""

    def __init__(self, path: str | Path | None = None):
        self._memory: dict[str, float] = {}
        self._lock = threading.Lock()
        self._path = Path(path) if path else None
        if self._path and self._path.exists():
            with open(self._path, encoding="utf-8") as f:
                for line in f:
                    if line.strip():
                        row = json.loads(line)
                        self._memory[row["key"]] = row["p"]
            log.info("score cache: loaded %d entries from %s", len(self._memory), self._path)

    @staticmethod
    def key(scorer_name: str, template_version: str, prompt_sha: str) -> str:
        return f"{scorer_name}|{template_version}|{prompt_sha}"

    def __len__(self) -> int:
        return len(self._memory)

    def get(self, key: str) -> float | None:
        with self._lock:
            return self._memory.get(key)

    def put(self, key: str, p: float) -> None:
        with self._lock:
            if key in self._memory:
                return
            self._memory[key] = p
            if self._path:
                with open(self._path, "a", encoding="utf-8") as f:
                    f.write(json.dumps({"key": key, "p": p}) + "\n")
