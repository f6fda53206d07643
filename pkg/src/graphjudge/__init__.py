"""Knowledge-graph construction and evaluation toolkit.

Pipeline: denoise documents around extracted entities, over-generate a
draft knowledge graph, judge every draft triple against its source
document with an LLM endpoint, and keep only the approved triples.
Includes n-gram and embedding-based graph similarity metrics.
"""

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

__all__ = [
    "Corpus",
    "Document",
    "Entity",
    "KnowledgeGraph",
    "TextGraphPair",
    "Triple",
    "canonicalize",
    "graph_entities",
]

__version__ = "0.1.0"
