"""Entity-centric text denoising and draft graph extraction.

Phase 1 extracts an entity list from the raw document and rewrites the
document around those entities (optionally iterated). Phase 2 extracts
as many candidate triples as possible from the denoised text, keeping
only triples whose head and tail resolve to phase-1 entities: heads and
tails are first repaired by canonical-form matching against the entity
list, and dropped (with a count) when no match exists.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from graphjudge import prompts
from graphjudge.core import Corpus, Document, Entity, KnowledgeGraph, Triple, canonicalize
from graphjudge.gateway import ChatRequest, ChatResponse, Gateway

log = logging.getLogger(__name__)


class ParseError(Exception):
    """Model output did not contain a recoverable list."""


@dataclass
class EctdOutput:
    pair_id: str
    entities: list[Entity]
    denoised: Document
    draft_graph: KnowledgeGraph
    dropped_triples: int = 0
    deduplicated_triples: int = 0
    transcripts: list[tuple[str, ChatRequest, ChatResponse]] = field(default_factory=list)


_FENCE = re.compile(r"^```[a-zA-Z]*\n|\n?```$", re.MULTILINE)


def _extract_bracketed(raw: str) -> str:
    """Return the outermost balanced [...] block of ``raw``."""
    text = _FENCE.sub("", raw).strip()
    start = text.find("[")
    if start == -1:
        raise ParseError(f"no list found in model output: {raw[:80]!r}")
    depth = 0
    in_string = False
    escape = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    raise ParseError(f"unbalanced list in model output: {raw[:80]!r}")


def parse_entity_list(raw: str) -> list[str]:
    """Tolerantly recover a flat list of strings from model output."""
    block = _extract_bracketed(raw)
    try:
        items = json.loads(block)
    except json.JSONDecodeError:
        # fall back: quoted items anywhere inside the brackets
        items = re.findall(r'"((?:[^"\\]|\\.)*)"', block)
        if not items:
            raise ParseError(f"unparseable entity list: {raw[:80]!r}") from None
    out: list[str] = []
    for item in items:
        if isinstance(item, str) and item.strip():
            out.append(item.strip())
    if not out and items:
        raise ParseError(f"entity list held no strings: {raw[:80]!r}")
    return out


def parse_triple_list(raw: str) -> tuple[list[tuple[str, str, str]], int]:
    """Recover a list of 3-item triples; items of the wrong length are skipped.

    Returns (triples, skipped_count).
    """
    block = _extract_bracketed(raw)
    try:
        items = json.loads(block)
    except json.JSONDecodeError as e:
        raise ParseError(f"unparseable triple list: {raw[:80]!r}") from e
    if not isinstance(items, list):
        raise ParseError("triple list is not a list")
    triples: list[tuple[str, str, str]] = []
    skipped = 0
    for item in items:
        if (
            isinstance(item, list)
            and len(item) == 3
            and all(isinstance(x, str) and x.strip() for x in item)
        ):
            triples.append((item[0].strip(), item[1].strip(), item[2].strip()))
        else:
            skipped += 1
    return triples, skipped


def _dedup_entities(names: list[str]) -> list[Entity]:
    seen: dict[str, Entity] = {}
    for name in names:
        e = Entity(name)
        seen.setdefault(e.canonical, e)
    return list(seen.values())


def extract_entities(doc: Document, gw: Gateway, *, model: str = "default",
                     transcripts: list | None = None) -> list[Entity]:
    """Phase-1 entity extraction; deduplicates by canonical form, keeps model order."""
    req = ChatRequest.user(prompts.render_entity_extraction(doc.text), model=model)
    resp = gw.complete(req)
    if transcripts is not None:
        transcripts.append(("entities", req, resp))
    return _dedup_entities(parse_entity_list(resp.content))


def denoise_document(doc: Document, entities: list[Entity], gw: Gateway, *,
                     iterations: int = 1, model: str = "default",
                     transcripts: list | None = None) -> Document:
    """Rewrite ``doc`` around ``entities``; with no entities, pass through unchanged."""
    if not entities:
        log.warning("no entities for %s; skipping denoising", doc.id)
        return Document(id=f"{doc.id}#denoised", text=doc.text)
    text = doc.text
    for _ in range(max(1, iterations)):
        req = ChatRequest.user(
            prompts.render_denoise(text, [e.surface for e in entities]), model=model
        )
        resp = gw.complete(req)
        if transcripts is not None:
            transcripts.append(("denoise", req, resp))
        if not resp.content.strip():
            log.warning("empty rewrite for %s; keeping previous text", doc.id)
            break
        text = resp.content.strip()
    return Document(id=f"{doc.id}#denoised", text=text)


def extract_relations(denoised: Document, entities: list[Entity], gw: Gateway, *,
                      model: str = "default", transcripts: list | None = None,
                      counters: dict | None = None) -> KnowledgeGraph:
    """Phase-2 relation extraction building the draft graph.

    Heads/tails outside the entity list are repaired by canonical-form
    matching where possible, otherwise the triple is dropped.
    """
    req = ChatRequest.user(
        prompts.render_relation_extraction(denoised.text, [e.surface for e in entities]),
        model=model,
    )
    resp = gw.complete(req)
    if transcripts is not None:
        transcripts.append(("relations", req, resp))
    parsed, skipped = parse_triple_list(resp.content)
    by_canon = {e.canonical: e for e in entities}
    graph = KnowledgeGraph()
    dropped = skipped
    dedup = 0
    for h, r, t in parsed:
        head = by_canon.get(canonicalize(h))
        tail = by_canon.get(canonicalize(t))
        if head is None or tail is None:
            dropped += 1
            continue
        if not graph.add(Triple(head, r, tail)):
            dedup += 1
    if counters is not None:
        counters["dropped"] = counters.get("dropped", 0) + dropped
        counters["deduplicated"] = counters.get("deduplicated", 0) + dedup
        counters["parsed"] = counters.get("parsed", 0) + len(parsed) + skipped
    return graph


def run_document(doc: Document, gw: Gateway, *, iterations: int = 1,
                 model: str = "default") -> EctdOutput:
    """Full ECTD over one document: entities, denoise, draft graph."""
    transcripts: list[tuple[str, ChatRequest, ChatResponse]] = []
    entities = extract_entities(doc, gw, model=model, transcripts=transcripts)
    denoised = denoise_document(
        doc, entities, gw, iterations=iterations, model=model, transcripts=transcripts
    )
    counters: dict[str, int] = {}
    graph = extract_relations(
        denoised, entities, gw, model=model, transcripts=transcripts, counters=counters
    )
    return EctdOutput(
        pair_id=doc.id,
        entities=entities,
        denoised=denoised,
        draft_graph=graph,
        dropped_triples=counters.get("dropped", 0),
        deduplicated_triples=counters.get("deduplicated", 0),
        transcripts=transcripts,
    )


def run_corpus(corpus: Corpus, gw: Gateway, *, iterations: int = 1,
               model: str = "default", workers: int | None = None) -> list[EctdOutput]:
    """ECTD over every document of a corpus. Output order follows corpus order."""
    docs = [p.document for p in corpus]
    workers = workers or gw.cfg.max_concurrency
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(
            pool.map(lambda d: run_document(d, gw, iterations=iterations, model=model), docs)
        )
