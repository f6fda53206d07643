"""Judging draft triples against their documents and filtering graphs.

Every draft triple becomes one prompt; the judge's reply is parsed into
a binary verdict and verdict-true triples form the refined graph.
Unparseable replies reject the triple by default (conservative mode); a
permissive mode keeping anything not explicitly negative is available
behind a flag.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from graphjudge.core import Document, KnowledgeGraph, Triple
from graphjudge.gateway import ChatRequest, Gateway, GatewayError


class CoverageError(Exception):
    """Judgements do not cover the draft graph exactly once."""


@dataclass(frozen=True)
class Judgement:
    triple: Triple
    verdict: bool
    raw_response: str
    pair_id: str = ""
    parseable: bool = True


def triple_to_sentence(t: Triple) -> str:
    """Render a triple as the sentence '<head> <relation> <tail>'."""
    return f"{t.head.surface} {t.relation} {t.tail.surface}"


_LEADING_WORD = re.compile(r"[a-z]+")


def parse_verdict(raw: str) -> tuple[bool, bool]:
    """Map judge output to (verdict, parseable). Total: never raises.

    The first alphabetic token decides: 'yes' -> true, 'no' -> false.
    Anything else is unparseable and conservatively rejected.
    """
    if not isinstance(raw, str):
        return (False, False)
    m = _LEADING_WORD.search(raw.casefold())
    if m is None:
        return (False, False)
    word = m.group(0)
    if word == "yes":
        return (True, True)
    if word == "no":
        return (False, True)
    return (False, False)


def judge_triple(instr, gw: Gateway, *, model: str = "default",
                 permissive: bool = False) -> Judgement:
    """Judge one rendered instruction. ``instr`` is a JudgementInstruction."""
    req = ChatRequest.user(instr.prompt_text, model=model)
    resp = gw.complete(req)
    verdict, parseable = parse_verdict(resp.content)
    if permissive and not parseable:
        # literal reading: keep anything not explicitly negative
        verdict = True
    return Judgement(
        triple=instr.triple,
        verdict=verdict,
        raw_response=resp.content,
        pair_id=instr.context.id,
        parseable=parseable,
    )


def filter_graph(draft: KnowledgeGraph, judgements: list[Judgement]) -> KnowledgeGraph:
    """Keep exactly the verdict-true triples of ``draft``, in draft order."""
    verdicts: dict[tuple[str, str, str], bool] = {}
    for j in judgements:
        if j.triple.key in verdicts:
            raise CoverageError(f"duplicate judgement for {j.triple.as_list()}")
        verdicts[j.triple.key] = j.verdict
    missing = [t for t in draft if t.key not in verdicts]
    if missing:
        raise CoverageError(f"{len(missing)} draft triples lack a judgement")
    return KnowledgeGraph([t for t in draft if verdicts[t.key]])


def judge_corpus(drafts: list[tuple[str, KnowledgeGraph, Document]], gw: Gateway, *,
                 model: str = "default", permissive: bool = False,
                 fail_fast: bool = False,
                 ) -> list[tuple[str, KnowledgeGraph, list[Judgement]]]:
    """Judge every draft triple with its denoised document as context.

    Gateway failures on single triples are recorded as unparseable
    rejections unless ``fail_fast``. Parallel across triples; output
    order is deterministic (corpus order, draft order within a graph).
    """
    from graphjudge.judge_data import render_instruction

    tasks: list[tuple[int, int, object]] = []
    for gi, (pair_id, draft, denoised) in enumerate(drafts):
        for ti, t in enumerate(draft):
            instr = render_instruction(
                denoised, t, label=None, provenance="inference",
                instr_id=f"{pair_id}/inf/{ti}",
            )
            tasks.append((gi, ti, instr))

    def run(task):
        gi, ti, instr = task
        try:
            return gi, ti, judge_triple(instr, gw, model=model, permissive=permissive)
        except GatewayError:
            if fail_fast:
                raise
            return gi, ti, Judgement(
                triple=instr.triple, verdict=False, raw_response="",
                pair_id=instr.context.id, parseable=False,
            )

    with ThreadPoolExecutor(max_workers=gw.cfg.max_concurrency) as pool:
        results = list(pool.map(run, tasks))

    per_graph: dict[int, list[tuple[int, Judgement]]] = {}
    for gi, ti, j in results:
        per_graph.setdefault(gi, []).append((ti, j))

    out = []
    for gi, (pair_id, draft, _denoised) in enumerate(drafts):
        judgements = [j for _, j in sorted(per_graph.get(gi, []))]
        out.append((pair_id, filter_graph(draft, judgements), judgements))
    return out


def judge_accuracy(instrs, gw: Gateway, *, model: str = "default") -> float:
    """Fraction of labeled instructions judged correctly; unparseable counts wrong."""
    if not instrs:
        return 0.0
    correct = 0
    for instr in instrs:
        if instr.gold_label is None:
            raise ValueError(f"instruction {instr.id} lacks a gold label")
        j = judge_triple(instr, gw, model=model)
        if j.parseable and j.verdict == instr.gold_label:
            correct += 1
    return correct / len(instrs)
