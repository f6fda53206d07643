import pytest
from hypothesis import given
from hypothesis import strategies as st

from graphjudge.core import (
    Corpus,
    Document,
    Entity,
    KnowledgeGraph,
    TextGraphPair,
    Triple,
    canonicalize,
    graph_entities,
)


class TestCanonicalize:
    def test_trims_collapses_and_casefolds(self):
        assert canonicalize("  Essex  Wildlife Trust ") == "essex wildlife trust"

    def test_empty_is_fixed_point(self):
        assert canonicalize("") == ""

    def test_case_fold(self):
        assert canonicalize("Nunatak") == "nunatak"

    @given(st.text())
    def test_idempotent(self, s):
        assert canonicalize(canonicalize(s)) == canonicalize(s)


class TestEntity:
    def test_equality_uses_canonical_form(self):
        assert Entity("Essex  Wildlife Trust") == Entity("essex wildlife trust")
        assert hash(Entity("A ")) == hash(Entity("a"))

    def test_surface_preserved(self):
        assert Entity("Essex Wildlife Trust").surface == "Essex Wildlife Trust"

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            Entity("   ")


class TestTriple:
    def test_componentwise_canonical_equality(self):
        assert Triple.of("A", "r", "B") == Triple.of("a ", "R", " b")

    def test_empty_relation_rejected(self):
        with pytest.raises(ValueError):
            Triple.of("a", " ", "b")


class TestKnowledgeGraph:
    def test_duplicate_insert_is_noop(self):
        g = KnowledgeGraph([Triple.of("a", "r", "b")])
        assert not g.add(Triple.of("A", "R", "B "))
        assert len(g) == 1

    def test_insertion_order_preserved(self):
        ts = [Triple.of("a", "r", "b"), Triple.of("b", "s", "c")]
        assert KnowledgeGraph(ts).triples == tuple(ts)

    def test_entities_single_triple(self):
        g = KnowledgeGraph([Triple.of("A", "r", "B")])
        assert graph_entities(g) == [Entity("A"), Entity("B")]

    def test_entities_empty_graph(self):
        assert graph_entities(KnowledgeGraph()) == []

    def test_entities_shared_deduplicated(self):
        g = KnowledgeGraph([Triple.of("A", "r", "B"), Triple.of("B", "s", "C")])
        assert graph_entities(g) == [Entity("A"), Entity("B"), Entity("C")]

    @given(
        st.lists(
            st.tuples(
                st.text(min_size=1).filter(lambda s: s.strip()),
                st.text(min_size=1).filter(lambda s: s.strip()),
                st.text(min_size=1).filter(lambda s: s.strip()),
            ),
            max_size=20,
        )
    )
    def test_heads_and_tails_always_in_entity_set(self, raw):
        g = KnowledgeGraph([Triple.of(*t) for t in raw])
        ents = set(graph_entities(g))
        for t in g:
            assert t.head in ents and t.tail in ents

    def test_relations_deduplicated(self):
        g = KnowledgeGraph([Triple.of("a", "R", "b"), Triple.of("c", "r ", "d")])
        assert g.relations() == ["R"]


class TestCorpus:
    def test_duplicate_ids_rejected(self):
        d = Document(id="x", text="t")
        pair = TextGraphPair(document=d, graph=KnowledgeGraph([Triple.of("a", "r", "b")]))
        with pytest.raises(ValueError):
            Corpus(pairs=(pair, pair))

    def test_bad_split_rejected(self):
        with pytest.raises(ValueError):
            Corpus(pairs=(), split="dev")

    def test_empty_document_rejected(self):
        with pytest.raises(ValueError):
            Document(id="x", text="  \n ")
