"""Offline backends: a gold-corpus oracle and backend construction helpers.

The oracle transport answers every pipeline prompt deterministically
from a gold corpus: entity extraction returns the gold graph's
entities, denoising echoes the input text, relation extraction returns
the gold triples, and judging approves exactly the triples present in
the matching gold graph. It exists so the whole pipeline can run
offline with a known-perfect end state.
"""

from __future__ import annotations

import json
import re

from graphjudge.core import Corpus, canonicalize
from graphjudge.gateway import (
    BackendConfig,
    ChatRequest,
    Embedder,
    Gateway,
    HashEmbedder,
    HttpEmbedder,
    MockTransport,
    Transport,
)
from graphjudge.judging import triple_to_sentence

_RAW_TEXT = re.compile(r'Raw text: "(.*)"\nDenoised text:', re.DOTALL)
_JUDGE_DOC = re.compile(r'Document: "(.*)"\n\nIs this true: (.*)\?', re.DOTALL)
_FINAL_TEXT = re.compile(r'Text: "(.*)"\n(?:List of entities|Entity List)', re.DOTALL)


class OracleTransport(Transport):
    """Answers pipeline prompts from a gold corpus (see module docstring)."""

    backend_id = "oracle"

    def __init__(self, corpus: Corpus):
        self.corpus = corpus
        self._by_text = {canonicalize(p.document.text): p for p in corpus}
        # denoised text is echoed raw text, so the same index serves judging
        self._gold_sentences = {
            canonicalize(p.document.text): {
                canonicalize(triple_to_sentence(t)) for t in p.graph
            }
            for p in corpus
        }

    def _pair_for(self, text: str):
        pair = self._by_text.get(canonicalize(text))
        if pair is None:
            raise ValueError(f"oracle: unknown document text {text[:60]!r}")
        return pair

    def send(self, req: ChatRequest) -> "ChatResponse":
        from graphjudge.gateway import ChatResponse

        content = req.messages[-1][1]
        return ChatResponse(content=self._answer(content), backend_id=self.backend_id)

    def _answer(self, prompt: str) -> str:
        if "Denoised text:" in prompt:
            m = _RAW_TEXT.search(prompt)
            if not m:
                raise ValueError("oracle: malformed denoise prompt")
            return m.group(1)
        if "Is this true:" in prompt:
            m = _JUDGE_DOC.search(prompt)
            if not m:
                raise ValueError("oracle: malformed judge prompt")
            doc_text, sentence = m.groups()
            gold = self._gold_sentences.get(canonicalize(doc_text))
            if gold is None:
                raise ValueError("oracle: unknown judge context")
            if canonicalize(sentence) in gold:
                return "Yes, it is true."
            return "No, it is not true."
        if "Semantic Graph:" in prompt:
            m = _FINAL_TEXT.search(prompt.rsplit("here is the text", 1)[-1])
            if not m:
                raise ValueError("oracle: malformed relation prompt")
            pair = self._pair_for(m.group(1))
            return json.dumps([t.as_list() for t in pair.graph], ensure_ascii=False)
        if "List of entities:" in prompt:
            m = _FINAL_TEXT.search(prompt.rsplit("here is the text", 1)[-1])
            if not m:
                raise ValueError("oracle: malformed entity prompt")
            pair = self._pair_for(m.group(1))
            return json.dumps(
                [e.surface for e in pair.graph.entities()], ensure_ascii=False
            )
        raise ValueError(f"oracle: unrecognized prompt {prompt[:60]!r}")


def make_gateway(kind: str, cfg: BackendConfig, *, corpus: Corpus | None = None,
                 script: dict[str, str] | None = None) -> Gateway:
    """Build a gateway for a backend ``kind``: http, oracle, or mock."""
    if kind == "http":
        return Gateway(cfg)
    if kind == "oracle":
        if corpus is None:
            raise ValueError("oracle backend needs a gold corpus")
        return Gateway(cfg, transport=OracleTransport(corpus))
    if kind == "mock":
        return Gateway(cfg, transport=MockTransport(script=script or {}))
    raise ValueError(f"unknown backend kind {kind!r}")


def make_embedder(kind: str, cfg: BackendConfig, *, dim: int = 256, seed: int = 0
                  ) -> Embedder:
    if kind == "http":
        return HttpEmbedder(cfg)
    if kind == "offline":
        return HashEmbedder(dim=dim, seed=seed)
    raise ValueError(f"unknown embedding backend kind {kind!r}")
