"""Shared domain types: documents, entities, triples, graphs, corpora.

All types are immutable after construction and safe to share across
threads. Entity and triple identity is canonical-form equality
(case-folded, whitespace-collapsed); original surfaces are preserved
for rendering. Graphs are insertion-ordered, duplicate-free triple
sets, so pipeline outputs stay deterministic and diffable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

_WS = re.compile(r"\s+")


def canonicalize(s: str) -> str:
    """Case-folded, whitespace-collapsed, trimmed form of ``s``. Idempotent."""
    return _WS.sub(" ", s).strip().casefold()


@dataclass(frozen=True)
class Document:
    """A unit of text, raw or denoised."""

    id: str
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError(f"document {self.id!r} has empty text")


@dataclass(frozen=True)
class Entity:
    """An entity mention. Equality and hashing use the canonical form."""

    surface: str

    def __post_init__(self):
        if not self.surface.strip():
            raise ValueError("entity surface is empty")

    @property
    def canonical(self) -> str:
        return canonicalize(self.surface)

    def __eq__(self, other):
        if not isinstance(other, Entity):
            return NotImplemented
        return self.canonical == other.canonical

    def __hash__(self):
        return hash(self.canonical)


@dataclass(frozen=True)
class Triple:
    """A (head, relation, tail) assertion. Component-wise canonical equality."""

    head: Entity
    relation: str
    tail: Entity

    def __post_init__(self):
        if not self.relation.strip():
            raise ValueError("triple relation is empty")

    @classmethod
    def of(cls, head: str, relation: str, tail: str) -> "Triple":
        return cls(Entity(head), relation, Entity(tail))

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.head.canonical, canonicalize(self.relation), self.tail.canonical)

    def __eq__(self, other):
        if not isinstance(other, Triple):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def as_list(self) -> list[str]:
        return [self.head.surface, self.relation, self.tail.surface]


class KnowledgeGraph:
    """Insertion-ordered, duplicate-free set of triples."""

    def __init__(self, triples: "list[Triple] | tuple[Triple, ...]" = ()):
        self._triples: list[Triple] = []
        self._keys: set[tuple[str, str, str]] = set()
        for t in triples:
            self.add(t)

    def add(self, t: Triple) -> bool:
        """Insert ``t``; returns False if an equal triple is already present."""
        if t.key in self._keys:
            return False
        self._keys.add(t.key)
        self._triples.append(t)
        return True

    @property
    def triples(self) -> tuple[Triple, ...]:
        return tuple(self._triples)

    def __contains__(self, t: Triple) -> bool:
        return t.key in self._keys

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self):
        return iter(self._triples)

    def __eq__(self, other):
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return self._triples == other._triples

    def __repr__(self):
        return f"KnowledgeGraph({len(self)} triples)"

    def entities(self) -> list[Entity]:
        """Union of heads and tails, deduplicated, in first-seen order."""
        seen: dict[str, Entity] = {}
        for t in self._triples:
            for e in (t.head, t.tail):
                seen.setdefault(e.canonical, e)
        return list(seen.values())

    def relations(self) -> list[str]:
        seen: dict[str, str] = {}
        for t in self._triples:
            seen.setdefault(canonicalize(t.relation), t.relation)
        return list(seen.values())


def graph_entities(g: KnowledgeGraph) -> list[Entity]:
    """Union of all heads and tails of ``g``, deduplicated by canonical form."""
    return g.entities()


@dataclass(frozen=True)
class TextGraphPair:
    """A document paired with its gold knowledge graph."""

    document: Document
    graph: KnowledgeGraph


@dataclass(frozen=True)
class Corpus:
    """A split-tagged list of text-graph pairs with unique document ids."""

    pairs: tuple[TextGraphPair, ...]
    split: str = "train"

    def __post_init__(self):
        if self.split not in ("train", "validation", "test"):
            raise ValueError(f"unknown split {self.split!r}")
        ids = [p.document.id for p in self.pairs]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate document ids in corpus")
        object.__setattr__(self, "pairs", tuple(self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def by_id(self, doc_id: str) -> TextGraphPair:
        for p in self.pairs:
            if p.document.id == doc_id:
                return p
        raise KeyError(doc_id)
