"""Run configuration: pipeline hyperparameters, backend endpoints, and
validation. Loaded from a TOML file with environment-variable overrides for
secrets."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

from .errors import ConfigError


@dataclass
class Config:
    # Retrieval / pruning
    m: int = 15
    n: int = 3
    p: float = 0.9
    beam_width: int = 5
    max_fallback_rounds: int = 2
    subgraph_radius: int = 2
    include_inverse: bool = True
    # Uncertainty gate
    au_threshold: float = 1.55
    au_top_k: int = 4
    au_transform: str = "softplus"
    l: int = 4
    # Backends
    llm_backend: str = "scripted"  # scripted | http
    llm_url: Optional[str] = None
    llm_model: str = "default"
    llm_auth_env: str = "HOPQA_API_KEY"
    scripted_path: Optional[str] = None
    scorer_backend: str = "lexical"  # lexical | http
    scorer_url: Optional[str] = None
    gnn_layers: int = 3
    # Context assembly
    repack_placement: str = "first"  # first | last
    # Misc
    graph_path: Optional[str] = None
    label_path: Optional[str] = None
    retries: int = 2
    normalize_answers: bool = True

    def validate(self) -> "Config":
        if self.n > self.m:
            raise ConfigError(f"n ({self.n}) must be <= m ({self.m})")
        if not (0 < self.p <= 1):
            raise ConfigError(f"p must be in (0, 1], got {self.p}")
        for name in ("m", "n", "beam_width", "au_top_k", "l", "subgraph_radius"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.max_fallback_rounds < 0:
            raise ConfigError("max_fallback_rounds must be >= 0")
        if self.au_threshold < 0:
            raise ConfigError("au_threshold must be >= 0")
        if self.au_transform not in ("softplus", "clamp"):
            raise ConfigError(f"unknown au_transform: {self.au_transform}")
        if self.repack_placement not in ("first", "last"):
            raise ConfigError(f"repack_placement must be first|last")
        if self.llm_backend not in ("scripted", "http"):
            raise ConfigError(f"unknown llm_backend: {self.llm_backend}")
        if self.scorer_backend not in ("lexical", "http"):
            raise ConfigError(f"unknown scorer_backend: {self.scorer_backend}")
        if self.llm_backend == "scripted" and not self.scripted_path:
            raise ConfigError("scripted llm_backend requires scripted_path")
        if self.llm_backend == "http" and not self.llm_url:
            raise ConfigError("http llm_backend requires llm_url")
        if self.scorer_backend == "http" and not self.scorer_url:
            raise ConfigError("http scorer_backend requires scorer_url")
        return self

    @classmethod
    def load(cls, path: Optional[str] = None, **overrides) -> "Config":
        data: dict = {}
        if path is not None:
            try:
                with open(path, "rb") as fh:
                    data = tomllib.load(fh)
            except (OSError, tomllib.TOMLDecodeError) as exc:
                raise ConfigError(f"cannot load config {path}: {exc}") from exc
        data.update({k: v for k, v in overrides.items() if v is not None})
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        env_url = os.environ.get("HOPQA_LLM_URL")
        if env_url:
            cfg.llm_url = env_url
        return cfg.validate()
