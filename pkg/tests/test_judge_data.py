import pytest

from graphjudge.core import Corpus, Document, KnowledgeGraph, TextGraphPair, Triple
from graphjudge.corpus_io import instruction_to_record
from graphjudge.judge_data import (
    JudgementInstruction,
    SamplingConfig,
    SizeError,
    build_instruction_set,
    sample_negatives,
    sample_positives,
    split_validation,
    token_jaccard,
)


def corpus_of(*graphs, split="train") -> Corpus:
    pairs = tuple(
        TextGraphPair(
            document=Document(id=f"p{i}", text=f"document {i}"),
            graph=KnowledgeGraph([Triple.of(*t) for t in ts]),
        )
        for i, ts in enumerate(graphs)
    )
    return Corpus(pairs=pairs, split=split)


class TestPositives:
    def test_single_pair_full_union(self):
        c = corpus_of([("a", "r", "b"), ("b", "s", "c"), ("c", "t", "d")])
        assert len(sample_positives(c)) == 3

    def test_empty_corpus(self):
        assert sample_positives(corpus_of()) == []

    def test_pair_ids_tagged(self):
        c = corpus_of([("a", "r", "b"), ("b", "s", "c")], [("x", "y", "z")])
        got = sample_positives(c)
        assert [pid for pid, _ in got] == ["p0", "p0", "p1"]


class TestNegatives:
    def test_support_set(self):
        c = corpus_of([("A", "r", "B"), ("C", "s", "D")])
        for seed in range(50):
            negs = sample_negatives(c, SamplingConfig(seed=seed))
            for _, neg in negs:
                if neg.head.surface == "A" and neg.relation == "r":
                    assert neg.tail.surface in ("A", "C", "D")
                    assert neg.tail.surface != "B"

    def test_single_entity_graph_yields_nothing(self):
        c = corpus_of([("A", "r", "A")])
        assert sample_negatives(c, SamplingConfig(seed=1)) == []

    def test_same_seed_identical(self):
        c = corpus_of([("a", "r", "b"), ("b", "s", "c"), ("d", "t", "e")])
        cfg = SamplingConfig(seed=42)
        assert sample_negatives(c, cfg) == sample_negatives(c, cfg)

    def test_negative_never_in_gold_graph(self):
        # complete graph over few entities: many corruptions collide with gold
        triples = [("a", "r", "b"), ("a", "r", "c"), ("b", "r", "c"), ("b", "r", "a")]
        c = corpus_of(triples)
        gold = c.pairs[0].graph
        for seed in range(100):
            for _, neg in sample_negatives(c, SamplingConfig(seed=seed)):
                assert neg not in gold

    def test_similar_tail_skipped(self):
        # only alternative tail is near-identical by token jaccard
        c = corpus_of([("alpha beta", "r", "gamma delta"), ("gamma delta x", "s", "alpha beta")])
        cfg = SamplingConfig(seed=0, similarity_skip_threshold=0.5)
        for _, neg in sample_negatives(c, cfg):
            assert token_jaccard(neg.tail.surface, "gamma delta") < 0.5 or \
                neg.head.surface != "alpha beta"

    def test_negatives_per_positive(self):
        c = corpus_of([("a", "r", "b"), ("c", "s", "d"), ("e", "t", "f")])
        negs = sample_negatives(c, SamplingConfig(seed=0, negatives_per_positive=2))
        assert len(negs) == 6


class TestTokenJaccard:
    def test_identical(self):
        assert token_jaccard("a b", "A  b") == 1.0

    def test_disjoint(self):
        assert token_jaccard("a", "b") == 0.0

    def test_partial(self):
        assert token_jaccard("a b", "b c") == pytest.approx(1 / 3)


class TestInstructionSet:
    def test_cardinality_and_balance(self):
        c = corpus_of([("a", "r", "b"), ("c", "s", "d")])
        instrs = build_instruction_set(c, SamplingConfig(seed=0))
        assert len(instrs) == 4
        assert sum(1 for i in instrs if i.gold_label) == 2
        assert sum(1 for i in instrs if not i.gold_label) == 2

    def test_prompt_contains_is_this_true_line(self):
        c = corpus_of([("h", "r", "t")])
        instrs = build_instruction_set(c, SamplingConfig(seed=0))
        pos = next(i for i in instrs if i.gold_label)
        assert "Is this true: h r t?" in pos.prompt_text
        assert "document 0" in pos.prompt_text

    def test_expected_answer_strings(self):
        from graphjudge.prompts import AFFIRMATIVE_ANSWER, NEGATIVE_ANSWER

        assert AFFIRMATIVE_ANSWER == "Yes, it is true."
        assert NEGATIVE_ANSWER == "No, it is not true."

    def test_provenance_label_consistency_enforced(self):
        with pytest.raises(ValueError):
            JudgementInstruction(
                id="x", context=Document(id="d", text="t"),
                triple=Triple.of("a", "r", "b"), prompt_text="p",
                gold_label=True, provenance="negative",
            )

    def test_byte_identical_reruns(self):
        c = corpus_of([("a", "r", "b"), ("b", "s", "c")], [("x", "y", "z"), ("z", "w", "q")])
        cfg = SamplingConfig(seed=9)
        a = [instruction_to_record(i) for i in build_instruction_set(c, cfg)]
        b = [instruction_to_record(i) for i in build_instruction_set(c, cfg)]
        assert a == b

    def test_negative_differs_only_in_tail(self):
        c = corpus_of([("a", "r", "b"), ("c", "s", "d"), ("e", "t", "f")])
        instrs = build_instruction_set(c, SamplingConfig(seed=3))
        positives = {i.triple.key for i in instrs if i.gold_label}
        for i in instrs:
            if i.gold_label:
                continue
            matches = [
                p for p in positives
                if p[0] == i.triple.key[0] and p[1] == i.triple.key[1]
            ]
            assert matches, "negative has no source positive with same head+relation"


class TestSplitValidation:
    def _instrs(self, n):
        c = corpus_of([(f"h{i}", "r", f"t{i}") for i in range(n)])
        return [i for i in build_instruction_set(c, SamplingConfig(seed=0)) if i.gold_label]

    def test_sizes(self):
        instrs = self._instrs(10)
        train, val = split_validation(instrs, 4, seed=1)
        assert len(val) == 4 and len(train) == 6
        assert {i.id for i in train}.isdisjoint({i.id for i in val})

    def test_zero(self):
        instrs = self._instrs(5)
        train, val = split_validation(instrs, 0, seed=1)
        assert val == [] and train == instrs

    def test_all(self):
        instrs = self._instrs(5)
        train, val = split_validation(instrs, len(instrs), seed=1)
        assert train == [] and len(val) == len(instrs)

    def test_too_large(self):
        with pytest.raises(SizeError):
            split_validation(self._instrs(3), 99, seed=1)
