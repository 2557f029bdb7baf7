"""HTTP serving of first-token log-probabilities.

Implements the chat-completions contract the scoring pipeline consumes:
one generated token with its top-K candidate log-probabilities.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import torch
import torch.nn.functional as F
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .model import ModelConfig, TinyCausalLM, apply_lora
from .tokenizer import Tokenizer

log = logging.getLogger(__name__)


@dataclass
class AdapterBundle:
    model: TinyCausalLM
    tokenizer: Tokenizer
    name: str


def load_adapter(adapter_dir: str | Path) -> AdapterBundle:
    adapter_dir = Path(adapter_dir)
    config = json.loads((adapter_dir / "config.json").read_text())
    tok = Tokenizer.load(adapter_dir / "tokenizer.json")
    model = TinyCausalLM(ModelConfig(**config["model"]))
    apply_lora(
        model,
        rank=config["rank"],
        alpha=config["alpha"],
        targets=tuple(config["lora_targets"]),
    )
    state = torch.load(adapter_dir / "model.pt", map_location="cpu", weights_only=True)
    model.load_state_dict(state)
    model.eval()
    return AdapterBundle(model=model, tokenizer=tok, name=config["base_model"])


class ChatMessage(BaseModel):
    role: str
    content: str


class ChatRequest(BaseModel):
    model: str
    messages: list[ChatMessage] = Field(min_length=1)
    max_tokens: int = 1
    temperature: float = 0.0
    logprobs: bool = False
    top_logprobs: int = 5


@torch.no_grad()
def first_token_logprobs(bundle: AdapterBundle, prompt: str, top_k: int):
    tok = bundle.tokenizer
    ids = tok.encode(prompt)
    budget = bundle.model.cfg.max_seq_len - 1
    if len(ids) > budget:
        ids = ids[-budget:]
    input_ids = torch.tensor([[tok.bos_id] + ids], dtype=torch.long)
    logits = bundle.model(input_ids)[0, -1]
    logprobs = F.log_softmax(logits, dim=-1)
    k = min(top_k, len(logprobs))
    top = torch.topk(logprobs, k)
    entries = [
        {"token": tok.decode_token(int(i)), "logprob": float(lp)}
        for lp, i in zip(top.values, top.indices)
    ]
    return entries


def build_app(bundle: AdapterBundle) -> FastAPI:
    app = FastAPI(title="sft-harness scorer")

    @app.get("/health")
    def health():
        return {"status": "ok", "model": bundle.name}

    @app.post("/v1/chat/completions")
    def chat_completions(request: ChatRequest):
        if request.max_tokens < 1:
            raise HTTPException(status_code=400, detail="max_tokens must be >= 1")
        user_turns = [m.content for m in request.messages if m.role == "user"]
        if not user_turns:
            raise HTTPException(status_code=400, detail="no user message in request")
        top_k = max(1, request.top_logprobs) if request.logprobs else 1
        entries = first_token_logprobs(bundle, user_turns[-1], top_k)
        chosen = entries[0]
        # exactly one token is generated regardless of the requested budget
        choice = {
            "index": 0,
            "message": {"role": "assistant", "content": chosen["token"]},
            "finish_reason": "length",
        }
        if request.logprobs:
            choice["logprobs"] = {
                "content": [
                    {
                        "token": chosen["token"],
                        "logprob": chosen["logprob"],
                        "top_logprobs": entries,
                    }
                ]
            }
        return {
            "id": "sft-harness-0",
            "object": "chat.completion",
            "model": request.model,
            "choices": [choice],
            "usage": {"completion_tokens": 1},
        }

    return app


def serve_adapter(adapter_dir: str | Path, host: str = "127.0.0.1", port: int = 8731):
    import uvicorn

    bundle = load_adapter(adapter_dir)
    log.info("serving adapter from %s on %s:%d", adapter_dir, host, port)
    uvicorn.run(build_app(bundle), host=host, port=port, log_level="warning")
