"""Graph similarity metrics and auxiliary evaluation harnesses.

Each triple is rendered as a sentence and graphs are compared three
ways: clipped n-gram precision with a brevity penalty (BLEU-style,
N=4), bigram recall (ROUGE-2 style), and embedding similarity under a
maximum-weight one-to-one assignment (BERTScore-style). Graph-level
accuracy/recall pair each sentence with its best counterpart and
average; F1 is the harmonic mean. Also: entity coverage, chunk-triple
relevance matrices, and an MCQ knowledge-retention harness.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from graphjudge import prompts
from graphjudge.core import Document, KnowledgeGraph, Triple
from graphjudge.ectd import ParseError, _extract_bracketed
from graphjudge.gateway import ChatRequest, Embedder, Gateway
from graphjudge.judging import triple_to_sentence


class EmptyCandidate(Exception):
    pass


class EmptyInput(Exception):
    pass


class AlignmentError(Exception):
    pass


class TooShort(Exception):
    pass


# Tokenization is part of the metric definition: lowercase, punctuation
# separated from words, then whitespace split. Fixed; do not change
# without re-pinning the golden scores.
_PUNCT = re.compile(r"([^\w\s])")


def tokenize(s: str) -> list[str]:
    return _PUNCT.sub(r" \1 ", s.casefold()).split()


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def g_bleu_pair(candidate: str, references: Sequence[str], *,
                max_order: int = 4, smooth: bool = True) -> float:
    """Clipped n-gram precision (n=1..4), geometric mean, brevity penalty.

    Orders where the candidate has no n-grams are excluded from the
    mean. With ``smooth``, zero precisions at n >= 2 contribute 1e-9
    instead of collapsing the score; a candidate with no unigram match
    scores exactly 0 either way.
    """
    cand = tokenize(candidate)
    if not cand:
        raise EmptyCandidate("candidate has no tokens")
    refs = [tokenize(r) for r in references if tokenize(r)]
    if not refs:
        raise EmptyCandidate("no non-empty reference")

    c = len(cand)
    # effective reference length: closest to the candidate, shorter on ties
    r = min((abs(len(ref) - c), len(ref)) for ref in refs)[1]
    bp = 1.0 if c > r else math.exp(1.0 - r / c)

    log_sum = 0.0
    used = 0
    for n in range(1, max_order + 1):
        cand_grams = _ngrams(cand, n)
        total = sum(cand_grams.values())
        if total == 0:
            continue
        max_ref = Counter()
        for ref in refs:
            ref_grams = _ngrams(ref, n)
            for g, cnt in ref_grams.items():
                if cnt > max_ref[g]:
                    max_ref[g] = cnt
        match = sum(min(cnt, max_ref[g]) for g, cnt in cand_grams.items())
        p = match / total
        if p == 0.0:
            if n == 1 or not smooth:
                return 0.0
            p = 1e-9
        log_sum += math.log(p)
        used += 1
    return bp * math.exp(log_sum / used)


def g_rouge_pair(candidate: str, references: Sequence[str], *, order: int = 2) -> float:
    """Bigram recall: clipped candidate/reference co-occurrences over
    reference bigrams; best reference wins. References shorter than the
    order fall back to an exact-token-match indicator.
    """
    if not references:
        raise EmptyInput("at least one reference required")
    cand = tokenize(candidate)
    best = 0.0
    for reference in references:
        ref = tokenize(reference)
        ref_grams = _ngrams(ref, order)
        total = sum(ref_grams.values())
        if total == 0:
            score = 1.0 if cand == ref else 0.0
        else:
            cand_grams = _ngrams(cand, order)
            match = sum(min(cnt, cand_grams[g]) for g, cnt in ref_grams.items())
            score = match / total
        best = max(best, score)
    return best


def similarity_matrix(rows: Sequence[str], cols: Sequence[str], emb: Embedder) -> np.ndarray:
    """Pairwise cosine similarity, clamped to [0, 1]."""
    vecs = emb.embed(list(rows) + list(cols))
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    vecs = vecs / np.clip(norms, 1e-12, None)
    sim = vecs[: len(rows)] @ vecs[len(rows) :].T
    return np.clip(sim, 0.0, 1.0)


def match_scores(sim: np.ndarray) -> tuple[float, float, float]:
    """(acc, recall, f1) from a pred x gold similarity matrix via
    maximum-weight one-to-one assignment."""
    n_pred, n_gold = sim.shape
    if n_pred == 0 and n_gold == 0:
        return (1.0, 1.0, 1.0)
    if n_pred == 0 or n_gold == 0:
        return (0.0, 0.0, 0.0)
    ri, ci = linear_sum_assignment(sim, maximize=True)
    weight = float(sim[ri, ci].sum())
    acc = weight / n_pred
    recall = weight / n_gold
    return (acc, recall, _f1(acc, recall))


def _f1(a: float, r: float) -> float:
    return 2 * a * r / (a + r) if a + r > 0 else 0.0


def g_bertscore_match(pred: Sequence[str], gold: Sequence[str], emb: Embedder
                      ) -> tuple[float, float, float]:
    """Embedding-similarity assignment between predicted and gold sentences."""
    if not pred and not gold:
        return (1.0, 1.0, 1.0)
    if not pred or not gold:
        return (0.0, 0.0, 0.0)
    return match_scores(similarity_matrix(pred, gold, emb))


@dataclass
class ScoreRow:
    """Nine scores for one graph pair: (acc, recall, f1) per family."""

    pair_id: str = ""
    bs: tuple[float, float, float] = (0.0, 0.0, 0.0)
    bleu: tuple[float, float, float] = (0.0, 0.0, 0.0)
    rouge: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def as_dict(self) -> dict:
        out = {"pair_id": self.pair_id}
        for fam, vals in (("G-BS", self.bs), ("G-BL", self.bleu), ("G-RO", self.rouge)):
            for name, v in zip(("acc", "recall", "f1"), vals):
                out[f"{fam}-{name}"] = v
        return out


@dataclass
class GraphScoreReport:
    rows: list[ScoreRow]
    macro: ScoreRow

    def as_dict(self) -> dict:
        return {"per_graph": [r.as_dict() for r in self.rows], "macro": self.macro.as_dict()}


def _best_match_mean(cands: Sequence[str], refs: Sequence[str], scorer) -> float:
    """Mean over candidates of the best pairwise score against refs."""
    if not cands and not refs:
        return 1.0
    if not cands or not refs:
        return 0.0
    return float(np.mean([max(scorer(c, [r]) for r in refs) for c in cands]))


def score_graph_pair(pred: KnowledgeGraph, gold: KnowledgeGraph, emb: Embedder, *,
                     pair_id: str = "", smooth_bleu: bool = True) -> ScoreRow:
    """All nine scores for one predicted/gold graph pair."""
    ps = [triple_to_sentence(t) for t in pred]
    gs = [triple_to_sentence(t) for t in gold]

    bs = g_bertscore_match(ps, gs, emb)

    def bleu(c, refs):
        return g_bleu_pair(c, refs, smooth=smooth_bleu)

    bl_acc = _best_match_mean(ps, gs, bleu)
    bl_rec = _best_match_mean(gs, ps, bleu)
    ro_acc = _best_match_mean(ps, gs, g_rouge_pair)
    ro_rec = _best_match_mean(gs, ps, g_rouge_pair)

    return ScoreRow(
        pair_id=pair_id,
        bs=bs,
        bleu=(bl_acc, bl_rec, _f1(bl_acc, bl_rec)),
        rouge=(ro_acc, ro_rec, _f1(ro_acc, ro_rec)),
    )


def score_corpus(preds: list[tuple[str, KnowledgeGraph]],
                 golds: list[tuple[str, KnowledgeGraph]],
                 emb: Embedder, *, smooth_bleu: bool = True) -> GraphScoreReport:
    """Per-graph rows plus the unweighted macro average of all nine scores."""
    if len(preds) != len(golds):
        raise AlignmentError(f"{len(preds)} predictions vs {len(golds)} gold graphs")
    for (pid, _), (gid, _) in zip(preds, golds):
        if pid != gid:
            raise AlignmentError(f"pair id mismatch: {pid!r} vs {gid!r}")
    rows = [
        score_graph_pair(p, g, emb, pair_id=pid, smooth_bleu=smooth_bleu)
        for (pid, p), (_, g) in zip(preds, golds)
    ]
    if rows:
        def avg(sel):
            cols = np.array([sel(r) for r in rows])
            return tuple(float(x) for x in cols.mean(axis=0))
        macro = ScoreRow(
            pair_id="macro",
            bs=avg(lambda r: r.bs),
            bleu=avg(lambda r: r.bleu),
            rouge=avg(lambda r: r.rouge),
        )
    else:
        macro = ScoreRow(pair_id="macro")
    return GraphScoreReport(rows=rows, macro=macro)


def entity_coverage(pred_entities: Sequence[str], gold_entities: Sequence[str],
                    emb: Embedder) -> tuple[float, float]:
    """(recall, acc) of predicted entity surfaces against gold, by assignment."""
    acc, recall, _ = g_bertscore_match(list(pred_entities), list(gold_entities), emb)
    return (recall, acc)


def split_chunks(text: str, chunks: int) -> list[str]:
    """Contiguous equal-token-count chunks; the remainder goes to leading chunks."""
    tokens = text.split()
    if len(tokens) < chunks:
        raise TooShort(f"{len(tokens)} tokens < {chunks} chunks")
    base, rem = divmod(len(tokens), chunks)
    out = []
    i = 0
    for k in range(chunks):
        size = base + (1 if k < rem else 0)
        out.append(" ".join(tokens[i : i + size]))
        i += size
    return out


def relevance_matrix(doc: Document, triples: Sequence[Triple], emb: Embedder, *,
                     chunks: int = 20) -> np.ndarray:
    """|triples| x chunks cosine-similarity matrix between triple sentences
    and contiguous document chunks."""
    if not triples:
        raise EmptyInput("at least one triple required")
    chunk_texts = split_chunks(doc.text, chunks)
    sentences = [triple_to_sentence(t) for t in triples]
    return similarity_matrix(sentences, chunk_texts, emb)


# --- MCQ knowledge-retention harness ---------------------------------------

_LABELS = ("A", "B", "C", "D")


@dataclass(frozen=True)
class Mcq:
    question: str
    options: tuple[str, str, str, str]
    answer: str

    def __post_init__(self):
        if self.answer not in _LABELS:
            raise ValueError(f"answer {self.answer!r} not in {_LABELS}")
        if len(set(self.options)) != 4:
            raise ValueError("options must be 4 distinct strings")


_OPTION_PREFIX = re.compile(r"^[A-D][.)]\s*")


def _mcq_from_item(item: dict) -> Mcq:
    options = [
        _OPTION_PREFIX.sub("", str(o)).strip() for o in item.get("options", [])
    ]
    if len(options) != 4:
        raise ValueError("need exactly 4 options")
    return Mcq(
        question=str(item["question"]).strip(),
        options=tuple(options),
        answer=str(item["answer"]).strip().upper()[:1],
    )


def generate_mcqs(doc: Document, n: int, gw: Gateway, *, model: str = "default"
                  ) -> tuple[list[Mcq], int]:
    """Generate ``n`` MCQs from a document; invalid items are dropped with a count."""
    if n < 1:
        raise ValueError("n must be >= 1")
    req = ChatRequest.user(prompts.render_mcq_generate(doc.text, n), model=model)
    resp = gw.complete(req)
    try:
        items = json.loads(_extract_bracketed(resp.content))
    except (ParseError, json.JSONDecodeError) as e:
        raise ParseError(f"unparseable MCQ list: {resp.content[:80]!r}") from e
    mcqs: list[Mcq] = []
    dropped = 0
    for item in items:
        try:
            mcqs.append(_mcq_from_item(item))
        except (ValueError, KeyError, TypeError):
            dropped += 1
    return mcqs, dropped


_LETTER = re.compile(r"(?<![A-Za-z])([A-D])(?![A-Za-z])")


def answer_mcq(context: Optional[str], q: Mcq, gw: Gateway, *, model: str = "default") -> str:
    """Ask one MCQ; returns 'A'..'D' or 'unparsed'. Context absent probes the
    model's prior; a document or serialized graph probes retention."""
    req = ChatRequest.user(
        prompts.render_mcq_answer(q.question, list(q.options), context), model=model
    )
    resp = gw.complete(req)
    m = _LETTER.search(resp.content)
    return m.group(1) if m else "unparsed"


def mcq_accuracy(results: Sequence[tuple[str, str]]) -> float:
    """Fraction of (chosen, gold) pairs answered correctly; unparsed is wrong."""
    if not results:
        raise EmptyInput("no MCQ results")
    return sum(1 for chosen, gold in results if chosen == gold) / len(results)
