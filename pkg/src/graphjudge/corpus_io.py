"""Loading, validating, and persisting corpora and pipeline artifacts.

Corpus files are JSONL with one ``{"id", "text", "graph": [[h, r, t], ...]}``
record per line. Loading applies the dataset hygiene rules: triples that
are not exactly three non-empty strings are dropped (counted), and pairs
whose graph ends up empty are dropped (counted). All writes are atomic
(temp file + rename) and every artifact round-trips losslessly.
"""

from __future__ import annotations

import json
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from graphjudge.core import Corpus, Document, Entity, KnowledgeGraph, TextGraphPair, Triple
from graphjudge.ectd import EctdOutput
from graphjudge.judge_data import JudgementInstruction
from graphjudge.judging import Judgement


class IoError(Exception):
    pass


class SchemaError(Exception):
    """Line-level schema violation; message carries the line number."""


@dataclass
class LoadReport:
    loaded_pairs: int = 0
    dropped_triples: int = 0
    dropped_pairs: int = 0


def _valid_triple(item) -> bool:
    return (
        isinstance(item, list)
        and len(item) == 3
        and all(isinstance(x, str) and x.strip() for x in item)
    )


def load_corpus(path: str | os.PathLike, split: str = "train") -> tuple[Corpus, LoadReport]:
    """Load a corpus JSONL file, applying the hygiene filters."""
    report = LoadReport()
    pairs: list[TextGraphPair] = []
    seen_ids: set[str] = set()
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}:{lineno}: invalid JSON: {e}") from e
        if not isinstance(rec, dict) or "id" not in rec or "text" not in rec:
            raise SchemaError(f"{path}:{lineno}: record needs 'id' and 'text'")
        doc_id = str(rec["id"])
        if doc_id in seen_ids:
            raise SchemaError(f"{path}:{lineno}: duplicate id {doc_id!r}")
        seen_ids.add(doc_id)
        text = rec["text"]
        if not isinstance(text, str) or not text.strip():
            raise SchemaError(f"{path}:{lineno}: empty text")
        graph_items = rec.get("graph", [])
        if not isinstance(graph_items, list):
            raise SchemaError(f"{path}:{lineno}: 'graph' must be a list")
        graph = KnowledgeGraph()
        for item in graph_items:
            if _valid_triple(item):
                graph.add(Triple.of(*item))
            else:
                report.dropped_triples += 1
        if len(graph) == 0:
            report.dropped_pairs += 1
            continue
        pairs.append(TextGraphPair(document=Document(id=doc_id, text=text), graph=graph))
    report.loaded_pairs = len(pairs)
    return Corpus(pairs=tuple(pairs), split=split), report


def save_corpus(corpus: Iterable[TextGraphPair], path: str | os.PathLike) -> None:
    records = [
        {"id": p.document.id, "text": p.document.text,
         "graph": [t.as_list() for t in p.graph]}
        for p in corpus
    ]
    write_jsonl(records, path)


# --- atomic writers ---------------------------------------------------------


def _atomic_write(path: str | os.PathLike, data: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(data, encoding="utf-8")
        os.replace(tmp, path)
    except OSError as e:
        tmp.unlink(missing_ok=True)
        raise IoError(f"cannot write {path}: {e}") from e


def write_jsonl(records: Iterable[dict], path: str | os.PathLike) -> None:
    _atomic_write(path, "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n"
                                for r in records))


def read_jsonl(path: str | os.PathLike) -> list[dict]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e
    return [json.loads(line) for line in lines if line.strip()]


def write_json(obj, path: str | os.PathLike) -> None:
    _atomic_write(path, json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n")


# --- artifact (de)serialization ---------------------------------------------


def ectd_to_record(out: EctdOutput) -> dict:
    return {
        "id": out.pair_id,
        "entities": [e.surface for e in out.entities],
        "denoised": out.denoised.text,
        "draft_graph": [t.as_list() for t in out.draft_graph],
        "dropped_triples": out.dropped_triples,
        "deduplicated_triples": out.deduplicated_triples,
    }


def ectd_from_record(rec: dict) -> EctdOutput:
    return EctdOutput(
        pair_id=rec["id"],
        entities=[Entity(s) for s in rec["entities"]],
        denoised=Document(id=f"{rec['id']}#denoised", text=rec["denoised"]),
        draft_graph=KnowledgeGraph([Triple.of(*t) for t in rec["draft_graph"]]),
        dropped_triples=rec.get("dropped_triples", 0),
        deduplicated_triples=rec.get("deduplicated_triples", 0),
    )


def instruction_to_record(instr: JudgementInstruction) -> dict:
    return {
        "id": instr.id,
        "context": instr.context.text,
        "context_id": instr.context.id,
        "triple": instr.triple.as_list(),
        "prompt": instr.prompt_text,
        "label": instr.gold_label,
        "provenance": instr.provenance,
    }


def instruction_from_record(rec: dict) -> JudgementInstruction:
    return JudgementInstruction(
        id=rec["id"],
        context=Document(id=rec.get("context_id", rec["id"]), text=rec["context"]),
        triple=Triple.of(*rec["triple"]),
        prompt_text=rec["prompt"],
        gold_label=rec["label"],
        provenance=rec["provenance"],
    )


def judgement_to_record(j: Judgement, prompt_hash: str = "") -> dict:
    return {
        "pair_id": j.pair_id,
        "triple": j.triple.as_list(),
        "prompt_hash": prompt_hash,
        "raw_response": j.raw_response,
        "verdict": j.verdict,
        "parseable": j.parseable,
    }


def refined_to_record(pair_id: str, graph: KnowledgeGraph) -> dict:
    return {"id": pair_id, "graph": [t.as_list() for t in graph]}


def refined_from_record(rec: dict) -> tuple[str, KnowledgeGraph]:
    return rec["id"], KnowledgeGraph([Triple.of(*t) for t in rec["graph"]])


# --- stats ------------------------------------------------------------------


@dataclass
class CorpusStats:
    pairs: int
    triples: int
    triples_per_graph: Counter
    doc_token_lengths: Counter

    def as_rows(self) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
        return (sorted(self.triples_per_graph.items()),
                sorted(self.doc_token_lengths.items()))


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Pair/triple counts plus distribution data for histograms."""
    tpg = Counter(len(p.graph) for p in corpus)
    lens = Counter(len(p.document.text.split()) for p in corpus)
    return CorpusStats(
        pairs=len(corpus),
        triples=sum(len(p.graph) for p in corpus),
        triples_per_graph=tpg,
        doc_token_lengths=lens,
    )
