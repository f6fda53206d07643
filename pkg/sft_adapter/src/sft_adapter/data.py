"""Instruction JSONL loading and example encoding.

Input is the judgement-instruction contract: one JSON object per line
with fields {id, context, triple, prompt, label, provenance}. The
rendered prompt conditions the model; the loss covers only the response
tokens (the canonical yes/no answer string derived from the label).
Long prompts are head-truncated so the question at the end survives.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from sft_adapter.model import ByteTokenizer

AFFIRMATIVE = "Yes, it is true."
NEGATIVE = "No, it is not true."

REQUIRED_FIELDS = {"id", "context", "triple", "prompt", "label", "provenance"}


class DataError(Exception):
    pass


@dataclass(frozen=True)
class Example:
    instr_id: str
    prompt: str
    response: str


def load_instructions(path: str | Path) -> list[Example]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    examples: list[Example] = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise DataError(f"{path}:{lineno}: invalid JSON: {e}") from e
        missing = REQUIRED_FIELDS - set(rec)
        if missing:
            raise DataError(f"{path}:{lineno}: missing fields {sorted(missing)}")
        if rec["label"] is None:
            raise DataError(f"{path}:{lineno}: unlabeled instruction cannot train")
        examples.append(
            Example(
                instr_id=str(rec["id"]),
                prompt=str(rec["prompt"]),
                response=AFFIRMATIVE if rec["label"] else NEGATIVE,
            )
        )
    if not examples:
        raise DataError(f"{path}: no instructions")
    return examples


def encode_example(ex: Example, tok: ByteTokenizer, max_seq_len: int
                   ) -> tuple[list[int], list[int]]:
    """(input_ids, loss_mask): mask is 1 on response-token predictions only.

    Layout: BOS prompt response EOS; targets are the inputs shifted left.
    """
    response_ids = tok.encode(ex.response) + [tok.eos_id]
    budget = max_seq_len - 1 - len(response_ids)  # BOS occupies one slot
    if budget < 1:
        raise DataError(f"{ex.instr_id}: response longer than max_seq_len")
    prompt_ids = tok.encode(ex.prompt)[-budget:]  # head-truncate the context
    input_ids = [tok.bos_id] + prompt_ids + response_ids
    # prediction at position i targets input_ids[i + 1]
    mask = [0] * len(prompt_ids) + [1] * len(response_ids)
    return input_ids, mask
