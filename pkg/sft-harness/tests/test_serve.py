from __future__ import annotations

import math

import pytest
from fastapi.testclient import TestClient

from sft_harness.serve import build_app, load_adapter
from sft_harness.train import TrainSpec, train_adapter


@pytest.fixture(scope="module")
def adapter_dir(tmp_path_factory):
    from conftest import separable_corpus_rows, write_corpus

    root = tmp_path_factory.mktemp("adapter")
    corpus = write_corpus(root / "corpus.jsonl", separable_corpus_rows())
    spec = TrainSpec(corpus_path=str(corpus), max_steps=5, lr=1e-3)
    return train_adapter(spec, root / "artifact").out_dir


@pytest.fixture(scope="module")
def client(adapter_dir):
    return TestClient(build_app(load_adapter(adapter_dir)))


def chat_body(prompt: str, **overrides):
    body = {
        "model": "adapter",
        "messages": [{"role": "user", "content": prompt}],
        "max_tokens": 1,
        "logprobs": True,
        "top_logprobs": 5,
    }
    body.update(overrides)
    return body


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


def test_chat_returns_single_token_with_logprobs(client):
    resp = client.post("/v1/chat/completions", json=chat_body("Answer with Y or N."))
    assert resp.status_code == 200
    body = resp.json()
    content = body["choices"][0]["logprobs"]["content"]
    assert len(content) == 1  # exactly one generated token
    entry = content[0]
    assert entry["token"] == body["choices"][0]["message"]["content"]
    top = entry["top_logprobs"]
    assert len(top) == 5
    lps = [t["logprob"] for t in top]
    assert lps == sorted(lps, reverse=True)
    assert all(lp <= 0 for lp in lps)
    assert math.isfinite(sum(lps))


def test_max_token_budget_still_yields_one_token(client):
    resp = client.post(
        "/v1/chat/completions", json=chat_body("Answer with Y or N.", max_tokens=32)
    )
    assert resp.status_code == 200
    body = resp.json()
    assert len(body["choices"][0]["logprobs"]["content"]) == 1
    assert body["usage"]["completion_tokens"] == 1


def test_malformed_requests_are_4xx(client):
    assert client.post("/v1/chat/completions", json={"model": "x"}).status_code == 422
    assert (
        client.post("/v1/chat/completions", json={"model": "x", "messages": []}).status_code
        == 422
    )
    bad_tokens = chat_body("hi", max_tokens=0)
    assert client.post("/v1/chat/completions", json=bad_tokens).status_code == 400
    no_user = chat_body("hi")
    no_user["messages"] = [{"role": "system", "content": "hi"}]
    assert client.post("/v1/chat/completions", json=no_user).status_code == 400


def test_logprobs_off_omits_block(client):
    resp = client.post(
        "/v1/chat/completions", json=chat_body("Answer with Y or N.", logprobs=False)
    )
    assert resp.status_code == 200
    assert "logprobs" not in resp.json()["choices"][0]
