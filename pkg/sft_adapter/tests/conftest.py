import json
import random
from pathlib import Path

import pytest

JUDGE_PROMPT = (
    'Please act as an expert in knowledge graphs, you need to clarify the '
    'correctness of the given triples according to the given document. '
    'Answer with "Yes, it is true." or "No, it is not true." only.\n\n'
    'Document: "{context}"\n\nIs this true: {sentence}?\n'
)


def make_instruction(i: int, label: bool) -> dict:
    """One record in the judgement-instruction JSONL contract."""
    h, r, t = f"thing{i}", "relates to", f"object{i}" if label else f"wrong{i}"
    context = f"In this document thing{i} relates to object{i}."
    return {
        "id": f"toy/{'pos' if label else 'neg'}/{i}",
        "context": context,
        "context_id": f"doc{i}",
        "triple": [h, r, t],
        "prompt": JUDGE_PROMPT.format(context=context, sentence=f"{h} {r} {t}"),
        "label": label,
        "provenance": "positive" if label else "negative",
    }


@pytest.fixture(scope="session")
def toy_instructions(tmp_path_factory) -> Path:
    rng = random.Random(0)
    records = [make_instruction(i, label=bool(i % 2)) for i in range(64)]
    rng.shuffle(records)
    path = tmp_path_factory.mktemp("data") / "instructions.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in records), encoding="utf-8")
    return path
