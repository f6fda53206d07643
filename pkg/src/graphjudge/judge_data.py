"""Judgement-instruction datasets via positive and negative sampling.

Positives are every gold triple; negatives corrupt the tail of each
positive with another entity of the same graph, skipping tails that are
identical or too similar to the original. Each sampled triple is
rendered with the judge prompt template against its paired document,
producing data usable both for fine-tuning and as a labeled judge
benchmark.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from graphjudge import prompts
from graphjudge.core import Corpus, Document, Entity, KnowledgeGraph, Triple, canonicalize
from graphjudge.judging import triple_to_sentence


class SizeError(Exception):
    """Requested sample larger than the population."""


def token_jaccard(a: str, b: str) -> float:
    ta, tb = set(canonicalize(a).split()), set(canonicalize(b).split())
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    return len(ta & tb) / len(ta | tb)


@dataclass(frozen=True)
class SamplingConfig:
    seed: int = 0
    negatives_per_positive: int = 1
    similarity_skip_threshold: float = 0.8
    # predicate(candidate_tail, original_tail) -> similarity in [0, 1]
    similarity: Callable[[str, str], float] = token_jaccard

    def __post_init__(self):
        if not (0.0 <= self.similarity_skip_threshold < 1.0):
            raise ValueError("similarity_skip_threshold must be in [0, 1)")
        if self.negatives_per_positive < 1:
            raise ValueError("negatives_per_positive must be >= 1")


@dataclass(frozen=True)
class JudgementInstruction:
    id: str
    context: Document
    triple: Triple
    prompt_text: str
    gold_label: Optional[bool]
    provenance: str  # positive | negative | inference

    def __post_init__(self):
        if self.provenance not in ("positive", "negative", "inference"):
            raise ValueError(f"bad provenance {self.provenance!r}")
        if self.provenance == "positive" and self.gold_label is not True:
            raise ValueError("positive instructions must be labeled true")
        if self.provenance == "negative" and self.gold_label is not False:
            raise ValueError("negative instructions must be labeled false")


def render_instruction(context: Document, triple: Triple, *, label: Optional[bool],
                       provenance: str, instr_id: str) -> JudgementInstruction:
    prompt = prompts.render_judge(context.text, triple_to_sentence(triple))
    return JudgementInstruction(
        id=instr_id,
        context=context,
        triple=triple,
        prompt_text=prompt,
        gold_label=label,
        provenance=provenance,
    )


def sample_positives(corpus: Corpus) -> list[tuple[str, Triple]]:
    """Every triple of every gold graph, tagged with its source pair id."""
    return [(p.document.id, t) for p in corpus for t in p.graph]


def _pair_rng(seed: int, pair_id: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}\x00{pair_id}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "little"))


def _negatives_for_positive(positive: Triple, graph: KnowledgeGraph,
                            entities: list[Entity], cfg: SamplingConfig,
                            rng: random.Random) -> list[Triple]:
    candidates = [e for e in entities if e.canonical != positive.tail.canonical]
    rng.shuffle(candidates)
    out: list[Triple] = []
    for cand in candidates:  # at most |entities| - 1 tries
        if cfg.similarity(cand.surface, positive.tail.surface) >= cfg.similarity_skip_threshold:
            continue
        neg = Triple(positive.head, positive.relation, cand)
        if neg in graph or neg in out:
            continue
        out.append(neg)
        if len(out) == cfg.negatives_per_positive:
            break
    return out


def sample_negatives(corpus: Corpus, cfg: SamplingConfig) -> list[tuple[str, Triple]]:
    """Tail-corruption negatives, deterministic given (corpus, cfg).

    Uses a per-pair RNG stream derived from (seed, pair id) so per-pair
    work can be parallelized without changing the output.
    """
    out: list[tuple[str, Triple]] = []
    for pair in corpus:
        rng = _pair_rng(cfg.seed, pair.document.id)
        entities = pair.graph.entities()
        for positive in pair.graph:
            for neg in _negatives_for_positive(positive, pair.graph, entities, cfg, rng):
                out.append((pair.document.id, neg))
    return out


def build_instruction_set(corpus: Corpus, cfg: SamplingConfig) -> list[JudgementInstruction]:
    """Union of rendered positives and negatives, shuffled by the seeded RNG."""
    docs = {p.document.id: p.document for p in corpus}
    instrs: list[JudgementInstruction] = []
    for i, (pid, t) in enumerate(sample_positives(corpus)):
        instrs.append(
            render_instruction(docs[pid], t, label=True, provenance="positive",
                               instr_id=f"{pid}/pos/{i}")
        )
    for i, (pid, t) in enumerate(sample_negatives(corpus, cfg)):
        instrs.append(
            render_instruction(docs[pid], t, label=False, provenance="negative",
                               instr_id=f"{pid}/neg/{i}")
        )
    random.Random(cfg.seed).shuffle(instrs)
    return instrs


def split_validation(instrs: list[JudgementInstruction], n: int, seed: int
                     ) -> tuple[list[JudgementInstruction], list[JudgementInstruction]]:
    """Seeded uniform sample of size ``n`` as validation; remainder as train."""
    if n > len(instrs):
        raise SizeError(f"requested {n} validation items from {len(instrs)}")
    rng = random.Random(seed)
    idx = set(rng.sample(range(len(instrs)), n))
    validation = [x for i, x in enumerate(instrs) if i in idx]
    train = [x for i, x in enumerate(instrs) if i not in idx]
    return train, validation
