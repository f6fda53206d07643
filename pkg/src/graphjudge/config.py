"""Pipeline configuration: a single TOML file describing all backends,
sampling and metric options, and the global seed. Environment variables
supply secrets only (API keys are read at request time, never stored)."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from graphjudge.gateway import BackendConfig


class ConfigError(Exception):
    pass


@dataclass
class EndpointSection:
    kind: str = "http"  # http | oracle | mock
    backend: BackendConfig = field(default_factory=BackendConfig)
    temperature: float = 0.0


@dataclass
class EmbeddingSection:
    kind: str = "offline"  # offline | http
    backend: BackendConfig = field(default_factory=BackendConfig)
    dim: int = 256
    seed: int = 0


@dataclass
class PipelineConfig:
    seed: int = 0
    extractor: EndpointSection = field(default_factory=EndpointSection)
    judge: EndpointSection = field(default_factory=EndpointSection)
    embedding: EmbeddingSection = field(default_factory=EmbeddingSection)
    ectd_iterations: int = 1
    negatives_per_positive: int = 1
    similarity_skip_threshold: float = 0.8
    smooth_bleu: bool = True
    relevance_chunks: int = 20
    raw: dict = field(default_factory=dict, repr=False)

    def config_hash(self) -> str:
        import json

        blob = json.dumps(self.raw, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


_BACKEND_KEYS = {
    "endpoint_url", "api_key_env", "model", "max_retries", "backoff_base",
    "max_concurrency", "replay_cache_dir", "max_total_tokens", "timeout",
}


def _endpoint_section(data: dict, name: str, *, require_url: bool) -> EndpointSection:
    sect = data.get(name, {})
    if not isinstance(sect, dict):
        raise ConfigError(f"section [{name}] must be a table")
    kind = sect.get("kind", "http")
    if kind not in ("http", "oracle", "mock"):
        raise ConfigError(f"{name}.kind must be http, oracle, or mock (got {kind!r})")
    backend_kw = {k: v for k, v in sect.items() if k in _BACKEND_KEYS}
    if kind == "http" and require_url and not backend_kw.get("endpoint_url"):
        raise ConfigError(f"missing config key: {name}.endpoint_url")
    try:
        backend = BackendConfig(**backend_kw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad [{name}] backend settings: {e}") from e
    return EndpointSection(kind=kind, backend=backend,
                           temperature=float(sect.get("temperature", 0.0)))


def load_config(path: str | Path) -> PipelineConfig:
    try:
        data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid TOML in {path}: {e}") from e
    return parse_config(data)


def parse_config(data: dict) -> PipelineConfig:
    extractor = _endpoint_section(data, "extractor", require_url=True)
    judge = _endpoint_section(data, "judge", require_url=True)

    emb_sect = data.get("embedding", {})
    emb_kind = emb_sect.get("kind", "offline")
    if emb_kind not in ("offline", "http"):
        raise ConfigError(f"embedding.kind must be offline or http (got {emb_kind!r})")
    emb_backend_kw = {k: v for k, v in emb_sect.items() if k in _BACKEND_KEYS}
    if emb_kind == "http" and not emb_backend_kw.get("endpoint_url"):
        raise ConfigError("missing config key: embedding.endpoint_url")
    embedding = EmbeddingSection(
        kind=emb_kind,
        backend=BackendConfig(**emb_backend_kw),
        dim=int(emb_sect.get("dim", 256)),
        seed=int(emb_sect.get("seed", 0)),
    )

    ectd_sect = data.get("ectd", {})
    sampling = data.get("sampling", {})
    metrics = data.get("metrics", {})
    try:
        return PipelineConfig(
            seed=int(data.get("seed", 0)),
            extractor=extractor,
            judge=judge,
            embedding=embedding,
            ectd_iterations=int(ectd_sect.get("iterations", 1)),
            negatives_per_positive=int(sampling.get("negatives_per_positive", 1)),
            similarity_skip_threshold=float(sampling.get("similarity_skip_threshold", 0.8)),
            smooth_bleu=bool(metrics.get("smooth_bleu", True)),
            relevance_chunks=int(metrics.get("relevance_chunks", 20)),
            raw=data,
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
