"""Adapter fine-tuning and logprob serving for triple-judgment corpora."""

from .corpus import CorpusError, InstructionRecord, label_balance, load_corpus
from .model import LoRALinear, ModelConfig, TinyCausalLM, apply_lora
from .serve import build_app, load_adapter, serve_adapter
from .tokenizer import LabelTokenError, Tokenizer
from .train import TrainSpec, TrainResult, train_adapter

__version__ = "0.1.0"

__all__ = [
    "CorpusError",
    "InstructionRecord",
    "label_balance",
    "load_corpus",
    "LoRALinear",
    "ModelConfig",
    "TinyCausalLM",
    "apply_lora",
    "build_app",
    "load_adapter",
    "serve_adapter",
    "LabelTokenError",
    "Tokenizer",
    "TrainSpec",
    "TrainResult",
    "train_adapter",
]
