import json

import pytest

from sft_adapter.data import (
    AFFIRMATIVE,
    NEGATIVE,
    DataError,
    Example,
    encode_example,
    load_instructions,
)
from sft_adapter.model import ByteTokenizer


class TestLoad:
    def test_labels_map_to_canonical_answers(self, toy_instructions):
        examples = load_instructions(toy_instructions)
        assert len(examples) == 64
        assert {e.response for e in examples} == {AFFIRMATIVE, NEGATIVE}

    def test_missing_field_rejected(self, tmp_path):
        p = tmp_path / "bad.jsonl"
        p.write_text(json.dumps({"id": "x", "prompt": "p"}) + "\n")
        with pytest.raises(DataError, match="missing fields"):
            load_instructions(p)

    def test_unlabeled_rejected(self, tmp_path):
        rec = {"id": "x", "context": "c", "triple": ["a", "r", "b"],
               "prompt": "p", "label": None, "provenance": "inference"}
        p = tmp_path / "bad.jsonl"
        p.write_text(json.dumps(rec) + "\n")
        with pytest.raises(DataError, match="unlabeled"):
            load_instructions(p)

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "empty.jsonl"
        p.write_text("")
        with pytest.raises(DataError, match="no instructions"):
            load_instructions(p)


class TestEncode:
    def test_loss_mask_covers_response_only(self):
        tok = ByteTokenizer()
        ex = Example(instr_id="x", prompt="question?", response=AFFIRMATIVE)
        ids, mask = encode_example(ex, tok, max_seq_len=512)
        n_resp = len(tok.encode(AFFIRMATIVE)) + 1  # + EOS
        assert len(ids) == len(mask) + 1  # targets are inputs shifted left
        assert mask[-n_resp:] == [1] * n_resp
        assert sum(mask) == n_resp

    def test_long_prompt_head_truncated(self):
        tok = ByteTokenizer()
        ex = Example(instr_id="x", prompt="A" * 1000 + " tail marker", response=NEGATIVE)
        ids, _ = encode_example(ex, tok, max_seq_len=128)
        assert len(ids) <= 128
        decoded = tok.decode(ids)
        assert "tail marker" in decoded  # the end of the prompt survives

    def test_overlong_response_rejected(self):
        tok = ByteTokenizer()
        ex = Example(instr_id="x", prompt="p", response="y" * 100)
        with pytest.raises(DataError):
            encode_example(ex, tok, max_seq_len=50)
