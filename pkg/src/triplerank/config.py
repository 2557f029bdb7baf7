"""Pipeline configuration: one TOML/JSON file plus flag overrides.

Secrets (API keys) come only from the environment; everything else lands in
the resolved config and its fingerprint so runs are reproducible.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .pipeline import SUPPORT_EXCLUDE_CHOICES
from .prompts import TEMPLATE_VERSION
from .scoring import MODES

SETTINGS = ("inductive", "transductive")
SCORERS = ("oracle", "constant", "random", "remote")
EMBEDDERS = ("hash", "remote")

API_KEY_ENV = "TRIPLERANK_API_KEY"


class ConfigError(ValueError):
    """Invalid or inconsistent pipeline configuration."""


@dataclass
class PipelineConfig:
    # data
    data_dir: str | None = None
    train_path: str | None = None
    test_path: str | None = None
    queries_path: str | None = None
    # protocol
    mode: str = "FULL"
    setting: str = "inductive"
    max_path_len: int = 3
    path_budget: int = 6
    neighbor_budget: int = 6
    support_size: int = 3
    negatives_per_positive: int = 12
    support_exclude: str = "both"
    strict_neighbor_orientation: bool = False
    bidirectional_paths: bool = True
    degree_source: str = "evidence"  # evidence | train
    prompt_word_budget: int = 1024
    raw_yes_probability: bool = False
    # backends
    scorer: str = "oracle"
    scorer_endpoint: str | None = None
    scorer_model: str | None = None
    embedder: str = "hash"
    embedder_endpoint: str | None = None
    embedder_model: str = "bge-small-en-v1.5"
    embed_dim: int = 64
    # run
    seed: int = 0
    concurrency: int = 4
    cache_dir: str = ".triplerank-cache"
    out_dir: str = "runs"

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.setting not in SETTINGS:
            raise ConfigError(f"setting must be one of {SETTINGS}, got {self.setting!r}")
        if self.scorer not in SCORERS:
            raise ConfigError(f"scorer must be one of {SCORERS}, got {self.scorer!r}")
        if self.embedder not in EMBEDDERS:
            raise ConfigError(f"embedder must be one of {EMBEDDERS}")
        if self.support_exclude not in SUPPORT_EXCLUDE_CHOICES:
            raise ConfigError(f"support_exclude must be one of {SUPPORT_EXCLUDE_CHOICES}")
        if self.degree_source not in ("evidence", "train"):
            raise ConfigError("degree_source must be 'evidence' or 'train'")
        for name in (
            "max_path_len",
            "path_budget",
            "neighbor_budget",
            "support_size",
            "negatives_per_positive",
            "prompt_word_budget",
            "concurrency",
            "embed_dim",
        ):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.scorer == "remote" and not self.scorer_endpoint:
            raise ConfigError("remote scorer requires scorer_endpoint")
        if self.embedder == "remote" and not self.embedder_endpoint:
            raise ConfigError("remote embedder requires embedder_endpoint")
        for attr in ("train_path", "test_path", "queries_path", "data_dir"):
            value = getattr(self, attr)
            if value is not None and not Path(value).exists():
                raise ConfigError(f"{attr} does not exist: {value}")

    def resolved_train_path(self) -> str:
        path = self.train_path or (self.data_dir and str(Path(self.data_dir) / "train.tsv"))
        if not path or not Path(path).exists():
            raise ConfigError("no training split configured (train_path or data_dir/train.tsv)")
        return path

    def resolved_test_path(self) -> str | None:
        if self.test_path:
            return self.test_path
        if self.data_dir:
            candidate = Path(self.data_dir) / f"test-{self.setting}.tsv"
            if candidate.exists():
                return str(candidate)
        return None

    def resolved_queries_path(self) -> str | None:
        if self.queries_path:
            return self.queries_path
        if self.data_dir:
            candidate = Path(self.data_dir) / f"queries-{self.setting}.tsv"
            if candidate.exists():
                return str(candidate)
        return None

    def api_key(self) -> str | None:
        return os.environ.get(API_KEY_ENV)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["template_version"] = TEMPLATE_VERSION
        return d

    def fingerprint(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def _read_config_file(path: str | Path) -> dict[str, Any]:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    if p.suffix == ".json":
        with open(p, encoding="utf-8") as f:
            return json.load(f)
    with open(p, "rb") as f:
        try:
            return tomllib.load(f)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse {p}: {exc}") from exc


def load_config(
    path: str | Path | None = None,
    overrides: dict[str, Any] | None = None,
) -> PipelineConfig:
    """Build a validated config from an optional file plus CLI overrides."""
    data: dict[str, Any] = {}
    if path is not None:
        data.update(_read_config_file(path))
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = PipelineConfig(**data)
    cfg.validate()
    return cfg
