"""Adapter fine-tuning: first-token cross-entropy on Y/N answers.

The loss is computed only at the answer position (the token following the
prompt); prompt tokens never contribute.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

import torch
import torch.nn.functional as F

from .corpus import CorpusError, InstructionRecord, label_balance, load_corpus
from .model import (
    DEFAULT_LORA_TARGETS,
    ModelConfig,
    TinyCausalLM,
    adapter_parameters,
    adapter_state_dict,
    apply_lora,
)
from .tokenizer import Tokenizer

log = logging.getLogger(__name__)

BASE_MODELS = {
    "tiny-v1": dict(d_model=64, n_heads=4, n_layers=2, d_ff=128),
}


@dataclass
class TrainSpec:
    corpus_path: str
    base_model: str = "tiny-v1"
    rank: int = 16
    alpha: int = 32
    lr: float = 1e-4
    epochs: int = 1
    batch_size: int = 2
    grad_accum: int = 4
    max_steps: int | None = None
    max_seq_len: int = 256
    seed: int = 0
    lora_targets: tuple[str, ...] = DEFAULT_LORA_TARGETS
    # None trains one adapter on the mixed corpus; name tasks to train the
    # separated per-task variant
    tasks: tuple[str, ...] | None = None


@dataclass
class TrainResult:
    out_dir: Path
    step_losses: list[float]
    eval_loss_before: float
    eval_loss_after: float
    label_counts: dict[str, int] = field(default_factory=dict)


def _encode_example(tok: Tokenizer, record: InstructionRecord, max_seq_len: int):
    ids = tok.encode(record.prompt)
    # keep the prompt tail: the query and answer instruction sit at the end
    budget = max_seq_len - 1
    if len(ids) > budget:
        ids = ids[-budget:]
    return [tok.bos_id] + ids, tok.encode_label(record.label)


def _batch(tok: Tokenizer, examples, indices):
    rows = [examples[i] for i in indices]
    width = max(len(ids) for ids, _ in rows)
    input_ids = torch.full((len(rows), width), tok.pad_id, dtype=torch.long)
    last = torch.empty(len(rows), dtype=torch.long)
    labels = torch.empty(len(rows), dtype=torch.long)
    for j, (ids, label_id) in enumerate(rows):
        input_ids[j, : len(ids)] = torch.tensor(ids, dtype=torch.long)
        last[j] = len(ids) - 1
        labels[j] = label_id
    return input_ids, last, labels


def _answer_loss(model, input_ids, last, labels) -> torch.Tensor:
    logits = model(input_ids)
    at_answer = logits[torch.arange(len(last)), last]  # [batch, vocab]
    return F.cross_entropy(at_answer, labels)


@torch.no_grad()
def corpus_loss(model, tok, examples, batch_size: int = 32) -> float:
    model.eval()
    total, count = 0.0, 0
    for start in range(0, len(examples), batch_size):
        indices = range(start, min(start + batch_size, len(examples)))
        input_ids, last, labels = _batch(tok, examples, list(indices))
        total += _answer_loss(model, input_ids, last, labels).item() * len(labels)
        count += len(labels)
    model.train()
    return total / count


def build_model(spec: TrainSpec, vocab_size: int) -> TinyCausalLM:
    if spec.base_model not in BASE_MODELS:
        raise ValueError(
            f"unknown base model {spec.base_model!r}; available: {sorted(BASE_MODELS)}"
        )
    cfg = ModelConfig(
        vocab_size=vocab_size, max_seq_len=spec.max_seq_len, **BASE_MODELS[spec.base_model]
    )
    return TinyCausalLM(cfg)


def train_adapter(spec: TrainSpec, out_dir: str | Path) -> TrainResult:
    """Fine-tune low-rank adapters on the corpus and save the artifact.

    The artifact directory holds the adapter weights, the merged model
    state used for serving, the tokenizer, and the resolved configuration.
    """
    records = load_corpus(spec.corpus_path)
    if spec.tasks is not None:
        records = [r for r in records if r.task in spec.tasks]
        if not records:
            raise CorpusError(f"no records match tasks {spec.tasks}")
    counts = label_balance(records)
    log.info("label balance: %s", counts)

    tok = Tokenizer.from_texts([r.prompt for r in records])
    examples = [_encode_example(tok, r, spec.max_seq_len) for r in records]

    torch.manual_seed(spec.seed)
    model = build_model(spec, vocab_size=len(tok))
    apply_lora(model, rank=spec.rank, alpha=spec.alpha, targets=spec.lora_targets)
    trainable = adapter_parameters(model)
    n_trainable = sum(p.numel() for p in trainable)
    log.info("adapter parameters: %d trainable", n_trainable)

    eval_before = corpus_loss(model, tok, examples)
    optimizer = torch.optim.AdamW(trainable, lr=spec.lr)
    rng = random.Random(spec.seed)

    step_losses: list[float] = []
    steps = 0
    done = False
    for _ in range(spec.epochs):
        order = list(range(len(examples)))
        rng.shuffle(order)
        micro_batches = [
            order[i : i + spec.batch_size] for i in range(0, len(order), spec.batch_size)
        ]
        for start in range(0, len(micro_batches), spec.grad_accum):
            optimizer.zero_grad()
            group = micro_batches[start : start + spec.grad_accum]
            step_loss = 0.0
            for indices in group:
                input_ids, last, labels = _batch(tok, examples, indices)
                loss = _answer_loss(model, input_ids, last, labels) / len(group)
                loss.backward()
                step_loss += loss.item()
            optimizer.step()
            steps += 1
            step_losses.append(step_loss)
            if steps % 10 == 0:
                log.info("step %d: loss %.4f", steps, step_loss)
            if spec.max_steps is not None and steps >= spec.max_steps:
                done = True
                break
        if done:
            break

    eval_after = corpus_loss(model, tok, examples)
    log.info("corpus loss: %.4f -> %.4f after %d steps", eval_before, eval_after, steps)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tok.save(out / "tokenizer.json")
    torch.save(adapter_state_dict(model), out / "adapter.pt")
    torch.save(model.state_dict(), out / "model.pt")
    (out / "config.json").write_text(
        json.dumps(
            {
                "model": model.cfg.to_dict(),
                "base_model": spec.base_model,
                "rank": spec.rank,
                "alpha": spec.alpha,
                "lora_targets": list(spec.lora_targets),
                "tasks": list(spec.tasks) if spec.tasks else None,
                "label_ids": {"Y": tok.encode_label("Y"), "N": tok.encode_label("N")},
                "label_counts": counts,
                "steps": steps,
                "eval_loss_before": eval_before,
                "eval_loss_after": eval_after,
            },
            indent=2,
        )
    )
    (out / "loss_curve.json").write_text(json.dumps(step_losses))
    return TrainResult(
        out_dir=out,
        step_losses=step_losses,
        eval_loss_before=eval_before,
        eval_loss_after=eval_after,
        label_counts=counts,
    )
