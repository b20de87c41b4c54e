"""YAML configuration with dotted-key lookup and validated defaults."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError, IoFailure

DEFAULTS: dict[str, object] = {
    "server.host": "127.0.0.1",
    "server.port": 8080,
    "retrieval.k": 3,
    "retrieval.threshold": 0.7,
    "generation.pipeline": "baseline",
    "degrade_gracefully": False,
    "suggestions.max": 1,
    "embedding.dim": 256,
    "feedback.log_path": "feedback.jsonl",
}

_VALID_PIPELINES = ("baseline", "react", "cotp", "cove")


def _flatten(tree: dict, prefix: str = "") -> dict[str, object]:
    flat: dict[str, object] = {}
    for key, value in tree.items():
        dotted = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{dotted}."))
        else:
            flat[dotted] = value
    return flat


@dataclass(frozen=True)
class Config:
    values: dict[str, object] = field(default_factory=dict)

    def get(self, key: str, default: object = None) -> object:
        if key in self.values:
            return self.values[key]
        if key in DEFAULTS:
            return DEFAULTS[key]
        return default

    @property
    def host(self) -> str:
        return str(self.get("server.host"))

    @property
    def port(self) -> int:
        return int(self.get("server.port"))

    @property
    def k(self) -> int:
        return int(self.get("retrieval.k"))

    @property
    def threshold(self) -> float:
        return float(self.get("retrieval.threshold"))

    @property
    def pipeline(self) -> str:
        return str(self.get("generation.pipeline"))

    @property
    def degrade_gracefully(self) -> bool:
        return bool(self.get("degrade_gracefully"))

    @property
    def max_suggestions(self) -> int:
        return int(self.get("suggestions.max"))

    @property
    def embedding_dim(self) -> int:
        return int(self.get("embedding.dim"))

    @property
    def feedback_log_path(self) -> str:
        return str(self.get("feedback.log_path"))

    def validate(self) -> "Config":
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"retrieval.threshold must be in [0, 1], got {self.threshold}")
        if self.k < 1:
            raise ConfigError(f"retrieval.k must be >= 1, got {self.k}")
        if self.pipeline not in _VALID_PIPELINES:
            raise ConfigError(f"generation.pipeline must be one of {_VALID_PIPELINES}, "
                              f"got {self.pipeline!r}")
        if self.max_suggestions < 1:
            raise ConfigError("suggestions.max must be >= 1")
        if not 1 <= self.port <= 65535:
            raise ConfigError(f"server.port out of range: {self.port}")
        return self


def load_config(path: str | Path | None = None) -> Config:
    """Load and validate a YAML config; None means pure defaults."""
    if path is None:
        return Config({}).validate()
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    try:
        tree = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if tree is None:
        tree = {}
    if not isinstance(tree, dict):
        raise ConfigError(f"config root must be a mapping, got {type(tree).__name__}")
    return Config(_flatten(tree)).validate()
