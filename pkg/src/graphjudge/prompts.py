"""Versioned prompt templates and their renderers.

Templates live as plain-text files under ``templates/`` with ``{name}``
placeholders; each run manifest records their content hashes so a run
can be reproduced exactly.
"""

from __future__ import annotations

import hashlib
import json
from importlib import resources


def _load(name: str) -> str:
    return (
        resources.files("graphjudge").joinpath(f"templates/{name}.txt").read_text("utf-8")
    )


ENTITY_EXTRACTION = _load("entity_extraction")
DENOISE = _load("denoise")
RELATION_EXTRACTION = _load("relation_extraction")
JUDGE = _load("judge")
MCQ_GENERATE = _load("mcq_generate")
MCQ_ANSWER = _load("mcq_answer")

AFFIRMATIVE_ANSWER = "Yes, it is true."
NEGATIVE_ANSWER = "No, it is not true."


def render_entity_extraction(text: str) -> str:
    return ENTITY_EXTRACTION.format(text=text)


def render_denoise(text: str, entities: list[str]) -> str:
    return DENOISE.format(text=text, entities=json.dumps(entities, ensure_ascii=False))


def render_relation_extraction(text: str, entities: list[str]) -> str:
    return RELATION_EXTRACTION.format(
        text=text, entities=json.dumps(entities, ensure_ascii=False)
    )


def render_judge(context: str, triple_sentence: str) -> str:
    return JUDGE.format(context=context, triple=triple_sentence)


def render_mcq_generate(text: str, n: int) -> str:
    return MCQ_GENERATE.format(text=text, n=n)


def render_mcq_answer(question: str, options: list[str], context: str | None) -> str:
    ctx = f"Passage: {context}\n" if context else ""
    return MCQ_ANSWER.format(
        context=ctx,
        question=question,
        option_a=options[0],
        option_b=options[1],
        option_c=options[2],
        option_d=options[3],
    )


def template_hashes() -> dict[str, str]:
    """Content hashes of every template, for run manifests."""
    names = {
        "entity_extraction": ENTITY_EXTRACTION,
        "denoise": DENOISE,
        "relation_extraction": RELATION_EXTRACTION,
        "judge": JUDGE,
        "mcq_generate": MCQ_GENERATE,
        "mcq_answer": MCQ_ANSWER,
    }
    return {
        k: hashlib.sha256(v.encode("utf-8")).hexdigest()[:16] for k, v in names.items()
    }
