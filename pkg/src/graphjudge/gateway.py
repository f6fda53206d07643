"""Client layer over chat-completion and embedding endpoints.

One client speaks to every model role (extractor, judge, embedder)
through the OpenAI-compatible JSON wire protocol. Retries with
exponential backoff, bounds in-flight concurrency with a semaphore,
tracks token usage against an optional budget, and supports a
content-addressed replay cache plus fully offline mock/deterministic
backends for testing.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import httpx
import numpy as np


class GatewayError(Exception):
    """Base class for gateway failures."""


class TransportError(GatewayError):
    """Network failure after exhausting retries."""


class ProtocolError(GatewayError):
    """Endpoint replied with something that is not a valid completion."""


class BudgetExceeded(GatewayError):
    """Configured token ceiling crossed."""


class EmptyInput(GatewayError):
    """Empty input where at least one item is required."""


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[tuple[str, str], ...]  # (role, content), role in {system, user}
    model: str = "default"
    temperature: float = 0.0
    max_output_tokens: int = 512

    def __post_init__(self):
        if not any(role == "user" for role, _ in self.messages):
            raise ValueError("request needs at least one user message")
        for role, content in self.messages:
            if role not in ("system", "user"):
                raise ValueError(f"unsupported role {role!r}")
            if not content:
                raise ValueError("empty message content")
        object.__setattr__(self, "messages", tuple(tuple(m) for m in self.messages))

    @classmethod
    def user(cls, content: str, **kw) -> "ChatRequest":
        return cls(messages=(("user", content),), **kw)

    def request_hash(self) -> str:
        """Stable content hash over model, messages, temperature, max tokens."""
        payload = json.dumps(
            {
                "model": self.model,
                "messages": [list(m) for m in self.messages],
                "temperature": self.temperature,
                "max_output_tokens": self.max_output_tokens,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ChatResponse:
    content: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    backend_id: str = "unknown"


@dataclass
class BackendConfig:
    endpoint_url: str = ""
    api_key_env: str = "OPENAI_API_KEY"
    model: str = "default"
    max_retries: int = 2
    backoff_base: float = 0.5
    max_concurrency: int = 4
    replay_cache_dir: Optional[str] = None
    max_total_tokens: Optional[int] = None
    timeout: float = 60.0

    def __post_init__(self):
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


class Transport:
    """A backend able to answer chat requests. Subclasses must be thread-safe."""

    backend_id = "abstract"

    def send(self, req: ChatRequest) -> ChatResponse:  # pragma: no cover
        raise NotImplementedError


class HttpTransport(Transport):
    """OpenAI-compatible ``/v1/chat/completions`` over HTTP."""

    def __init__(self, cfg: BackendConfig):
        self.cfg = cfg
        self.backend_id = f"http:{cfg.endpoint_url}"
        self._client = httpx.Client(timeout=cfg.timeout)

    def send(self, req: ChatRequest) -> ChatResponse:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.cfg.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": req.model,
            "messages": [{"role": r, "content": c} for r, c in req.messages],
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
        }
        url = self.cfg.endpoint_url.rstrip("/") + "/v1/chat/completions"
        try:
            resp = self._client.post(url, json=body, headers=headers)
        except httpx.HTTPError as e:
            raise TransportError(str(e)) from e
        if resp.status_code in (429, 500, 502, 503, 504):
            raise TransportError(f"status {resp.status_code}")
        if resp.status_code != 200:
            raise ProtocolError(f"status {resp.status_code}: {resp.text[:200]}")
        try:
            data = resp.json()
            content = data["choices"][0]["message"]["content"]
            usage = data.get("usage", {})
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise ProtocolError(f"malformed completion reply: {e}") from e
        return ChatResponse(
            content=content,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
            backend_id=self.backend_id,
        )


class MockTransport(Transport):
    """Deterministic scripted backend for offline tests.

    Answers from an explicit ``{request_hash: content}`` script, or via a
    ``responder(req) -> str`` callable for rule-based mocks. Unscripted
    requests raise TransportError (simulating a dead endpoint).
    """

    backend_id = "mock"

    def __init__(
        self,
        script: Optional[dict[str, str]] = None,
        responder: Optional[Callable[[ChatRequest], str]] = None,
    ):
        self.script = dict(script or {})
        self.responder = responder
        self.calls = 0
        self._lock = threading.Lock()

    def send(self, req: ChatRequest) -> ChatResponse:
        with self._lock:
            self.calls += 1
        h = req.request_hash()
        if h in self.script:
            return ChatResponse(content=self.script[h], backend_id=self.backend_id)
        if self.responder is not None:
            return ChatResponse(content=self.responder(req), backend_id=self.backend_id)
        raise TransportError(f"no scripted response for request {h[:12]}")


class Gateway:
    """Chat client with retries, concurrency bound, budget, and replay cache."""

    def __init__(self, cfg: BackendConfig, transport: Optional[Transport] = None):
        self.cfg = cfg
        self.transport = transport or HttpTransport(cfg)
        self._sem = threading.Semaphore(cfg.max_concurrency)
        self._lock = threading.Lock()
        self._tokens_used = 0
        self._in_flight = 0
        self.max_in_flight_seen = 0  # instrumentation for the concurrency property

    @property
    def tokens_used(self) -> int:
        return self._tokens_used

    def _cache_path(self, req: ChatRequest) -> Optional[Path]:
        if not self.cfg.replay_cache_dir:
            return None
        return Path(self.cfg.replay_cache_dir) / f"{req.request_hash()}.json"

    def complete(self, req: ChatRequest) -> ChatResponse:
        cache = self._cache_path(req)
        if cache is not None and cache.exists():
            data = json.loads(cache.read_text(encoding="utf-8"))
            return ChatResponse(**data)

        with self._lock:
            if (
                self.cfg.max_total_tokens is not None
                and self._tokens_used >= self.cfg.max_total_tokens
            ):
                raise BudgetExceeded(
                    f"{self._tokens_used} tokens used >= ceiling {self.cfg.max_total_tokens}"
                )

        resp = self._send_with_retries(req)

        with self._lock:
            self._tokens_used += resp.prompt_tokens + resp.completion_tokens

        if cache is not None:
            cache.parent.mkdir(parents=True, exist_ok=True)
            tmp = cache.with_suffix(".tmp")
            tmp.write_text(
                json.dumps(resp.__dict__, ensure_ascii=False, sort_keys=True),
                encoding="utf-8",
            )
            os.replace(tmp, cache)
        return resp

    def _send_with_retries(self, req: ChatRequest) -> ChatResponse:
        attempts = self.cfg.max_retries + 1
        last: Exception = TransportError("no attempt made")
        for attempt in range(attempts):
            with self._sem:
                with self._lock:
                    self._in_flight += 1
                    self.max_in_flight_seen = max(self.max_in_flight_seen, self._in_flight)
                try:
                    return self.transport.send(req)
                except TransportError as e:
                    last = e
                finally:
                    with self._lock:
                        self._in_flight -= 1
            if attempt < attempts - 1:
                time.sleep(self.cfg.backoff_base * (2**attempt))
        raise last


def complete(req: ChatRequest, cfg: BackendConfig) -> ChatResponse:
    """One-shot convenience wrapper around :class:`Gateway`."""
    return Gateway(cfg).complete(req)


# --- embeddings -----------------------------------------------------------


class Embedder:
    dim: int = 0

    def embed(self, texts: Sequence[str]) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError


class HttpEmbedder(Embedder):
    """OpenAI-compatible ``/v1/embeddings``."""

    def __init__(self, cfg: BackendConfig):
        self.cfg = cfg
        self._client = httpx.Client(timeout=cfg.timeout)

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        _check_embed_input(texts)
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.cfg.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        url = self.cfg.endpoint_url.rstrip("/") + "/v1/embeddings"
        try:
            resp = self._client.post(
                url,
                json={"model": self.cfg.model, "input": list(texts)},
                headers=headers,
            )
        except httpx.HTTPError as e:
            raise TransportError(str(e)) from e
        if resp.status_code != 200:
            raise ProtocolError(f"status {resp.status_code}")
        try:
            rows = [item["embedding"] for item in resp.json()["data"]]
        except (ValueError, KeyError, TypeError) as e:
            raise ProtocolError(f"malformed embeddings reply: {e}") from e
        return np.asarray(rows, dtype=np.float64)


class HashEmbedder(Embedder):
    """Deterministic offline embedder with token-overlap structure.

    Each token maps to a fixed pseudorandom unit direction seeded by a
    hash of (seed, token); a sentence embeds as the normalized sum of its
    token vectors. Identical strings get identical vectors, and sentences
    sharing tokens get positive similarity.
    """

    def __init__(self, dim: int = 256, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def _token_vec(self, token: str) -> np.ndarray:
        with self._lock:
            v = self._cache.get(token)
            if v is None:
                digest = hashlib.sha256(f"{self.seed}\x00{token}".encode("utf-8")).digest()
                rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
                v = rng.standard_normal(self.dim)
                v /= np.linalg.norm(v)
                self._cache[token] = v
            return v

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        _check_embed_input(texts)
        out = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            tokens = text.casefold().split()
            if not tokens:
                tokens = [""]
            v = np.sum([self._token_vec(t) for t in tokens], axis=0)
            norm = np.linalg.norm(v)
            if norm < 1e-12:
                # degenerate cancellation; fall back to hashing the whole string
                v = self._token_vec("\x00" + text)
                norm = 1.0
            out[i] = v / norm
        return out


def _check_embed_input(texts: Sequence[str]) -> None:
    if len(texts) == 0:
        raise EmptyInput("embed() requires at least one text")
    if any(not t for t in texts):
        raise EmptyInput("embed() texts must be non-empty")


def embed(texts: Sequence[str], cfg: BackendConfig) -> np.ndarray:
    return HttpEmbedder(cfg).embed(texts)
