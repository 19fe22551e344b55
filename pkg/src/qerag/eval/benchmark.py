"""Seeded synthetic benchmark with labelled queries.

Every document draws its words from a private vocabulary of pseudo-words, so
lexical overlap only exists where the generator puts it:

* a *lexical* query is its target document with one word dropped;
* a *graph* query is a near-copy of a seed document whose only link to the
  answer is a DependsOn edge, and the answer shares no token with the query
  (checked, together with cosine < threshold, while generating);
* a *conflicted* lexical query has a lower-credibility twin document with the
  same words but a different FACT value;
* a *regulated* query's requirement node is attached to a Regulation node.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from ..corpus import Corpus, SourceKind, ingest
from ..embedding import EmbedderSpec, make_embedder, tokenize
from ..graph import EdgeType, KnowledgeGraph, NodeType
from ..retrieval.engine import Indexes
from ..vector_index import DEFAULT_THRESHOLD, VectorIndex, build_index

_CONSONANTS = "bcdfghjklmnprstvwz"
_VOWELS = "aeiou"
DOC_WORDS = 20
LEXICAL_MARGIN = 0.03
N_REGULATIONS = 3
_DISTRACTOR_EDGES = (EdgeType.DependsOn, EdgeType.Requires, EdgeType.Covers, EdgeType.MapsTo, EdgeType.PartOf)


@dataclass(frozen=True)
class BenchmarkQuery:
    id: str
    text: str
    relevant: tuple[str, ...]
    requires_graph: bool
    requirement: str
    conflicted: bool = False
    regulated: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "text": self.text,
            "relevant": list(self.relevant),
            "requires_graph": self.requires_graph,
            "requirement": self.requirement,
            "conflicted": self.conflicted,
            "regulated": self.regulated,
        }


@dataclass
class SyntheticBenchmark:
    corpus: Corpus
    graph: KnowledgeGraph
    queries: list[BenchmarkQuery]
    seed: int
    records: list[dict[str, Any]] = field(default_factory=list)
    spec: EmbedderSpec = field(default_factory=EmbedderSpec)

    @cached_property
    def index(self) -> VectorIndex:
        return build_index(self.corpus, self.spec)

    def indexes(self) -> Indexes:
        return Indexes(self.corpus, self.index)

    def graph_queries(self) -> list[BenchmarkQuery]:
        return [q for q in self.queries if q.requires_graph]

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "records": self.records,
            "graph": self.graph.to_dict(),
            "queries": [q.to_dict() for q in self.queries],
        }


class _WordSource:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.used: set[str] = set()

    def word(self) -> str:
        while True:
            n = self.rng.randint(2, 4)
            w = "".join(self.rng.choice(_CONSONANTS) + self.rng.choice(_VOWELS) for _ in range(n))
            w += self.rng.choice(_CONSONANTS)
            if w not in self.used:
                self.used.add(w)
                return w

    def words(self, n: int = DOC_WORDS) -> list[str]:
        return [self.word() for _ in range(n)]


def _cos(embedder, a: str, b: str) -> float:
    return float(np.dot(embedder.embed(a), embedder.embed(b)))


def _near_copy(embedder, rng: random.Random, words: list[str], doc_text: str, floor: float) -> str | None:
    """Drop one word so the query still scores at least ``floor`` against the document."""
    order = list(range(len(words)))
    rng.shuffle(order)
    for drop in order:
        query = " ".join(w for i, w in enumerate(words) if i != drop)
        if _cos(embedder, query, doc_text) >= floor:
            return query
    return None


def token_overlap(a: str, b: str) -> set[str]:
    return set(tokenize(a)) & set(tokenize(b))


def make_benchmark(
    seed: int,
    n_docs: int = 200,
    n_queries: int = 40,
    graph_fraction: float = 0.5,
    *,
    conflict_fraction: float = 0.25,
    regulated_fraction: float = 0.25,
    spec: EmbedderSpec | None = None,
    threshold: float = DEFAULT_THRESHOLD,
) -> SyntheticBenchmark:
    """Deterministic benchmark for ``seed``.

    ``n_docs`` is a floor: the corpus grows past it when the queries need
    more documents than that.
    """
    if n_docs < 1 or n_queries < 1:
        raise ValueError("n_docs and n_queries must be >= 1")
    for name, frac in (("graph_fraction", graph_fraction), ("conflict_fraction", conflict_fraction),
                       ("regulated_fraction", regulated_fraction)):
        if not 0.0 <= frac <= 1.0:
            raise ValueError(f"{name} must be in [0, 1]")
    spec = spec or EmbedderSpec()
    embedder = make_embedder(spec)
    rng = random.Random(seed)
    vocab = _WordSource(rng)

    n_graph = round(graph_fraction * n_queries)
    kinds = [True] * n_graph + [False] * (n_queries - n_graph)
    rng.shuffle(kinds)
    lexical_ids = [i for i, g in enumerate(kinds) if not g]
    conflicted = set(rng.sample(lexical_ids, round(conflict_fraction * len(lexical_ids))))
    regulated = set(rng.sample(range(n_queries), round(regulated_fraction * n_queries)))

    records: list[dict[str, Any]] = []
    edges: list[tuple[str, str, EdgeType]] = []
    plans: list[tuple[int, str, str, bool]] = []  # (query index, query text, answer doc, requires_graph)

    def add_doc(words: list[str], kind: SourceKind, extra: str = "", ts: int = 1_700_000_000) -> str:
        doc_id = f"D{len(records):05d}"
        text = " ".join(words) + (f" {extra}" if extra else "")
        records.append(
            {"doc_id": doc_id, "kind": kind.value, "title": f"{kind.value} {doc_id}", "text": text,
             "source": f"bench/{kind.value.lower()}", "timestamp": ts}
        )
        return doc_id

    for qi, needs_graph in enumerate(kinds):
        while True:
            if needs_graph:
                seed_words, answer_words = vocab.words(), vocab.words()
                seed_text, answer_text = " ".join(seed_words), " ".join(answer_words)
                query = _near_copy(embedder, rng, seed_words, seed_text, threshold + LEXICAL_MARGIN)
                if query is None or token_overlap(query, answer_text):
                    continue
                if _cos(embedder, query, answer_text) >= threshold:
                    continue
                seed_doc = add_doc(seed_words, SourceKind.SapDoc)
                answer_doc = add_doc(answer_words, SourceKind.SapDoc)
                edges.append((seed_doc, answer_doc, EdgeType.DependsOn))
                plans.append((qi, query, answer_doc, True))
                break
            words = vocab.words()
            fact = ""
            if qi in conflicted:
                fact = f"FACT: cfg{qi:03d}.value = {rng.randint(10, 49)}"
            doc_text = " ".join(words) + (f" {fact}" if fact else "")
            query = _near_copy(embedder, rng, words, doc_text, threshold + LEXICAL_MARGIN)
            if query is None:
                continue
            target = add_doc(words, SourceKind.ConfigGuide, fact, ts=1_700_000_000 + qi)
            if qi in conflicted:
                twin_fact = f"FACT: cfg{qi:03d}.value = {rng.randint(50, 99)}"
                add_doc(words, SourceKind.LegacyTest, twin_fact, ts=1_600_000_000 + qi)
            plans.append((qi, query, target, False))
            break

    n_structured = len(records)
    distractors = []
    while len(records) < max(n_docs, n_structured):
        distractors.append(add_doc(vocab.words(), rng.choice([SourceKind.SapDoc, SourceKind.BusinessProcessMap])))
    for _ in range(len(distractors)):
        if len(distractors) < 2:
            break
        a, b = rng.sample(distractors, 2)
        edges.append((a, b, rng.choice(_DISTRACTOR_EDGES)))

    corpus = ingest(records)
    graph = KnowledgeGraph()
    for rec in records:
        graph.add_node(rec["doc_id"], NodeType.Component, label=rec["title"],
                       chunk_refs={c.id for c in corpus.by_doc(rec["doc_id"])})
    for src, dst, etype in edges:
        if graph.weight(src, dst, etype) is None:
            graph.add_edge(src, dst, etype)
    for r in range(1, N_REGULATIONS + 1):
        graph.add_node(f"REG-{r:02d}", NodeType.Regulation, label=f"Regulation {r}")

    queries = []
    for qi, text, answer_doc, needs_graph in plans:
        req = f"REQ-Q{qi:03d}"
        graph.add_node(req, NodeType.Requirement, label=text)
        if qi in regulated:
            graph.add_edge(req, f"REG-{qi % N_REGULATIONS + 1:02d}", EdgeType.DerivedFrom)
        queries.append(
            BenchmarkQuery(
                id=f"Q{qi:03d}",
                text=text,
                relevant=tuple(c.id for c in corpus.by_doc(answer_doc)),
                requires_graph=needs_graph,
                requirement=req,
                conflicted=qi in conflicted,
                regulated=qi in regulated,
            )
        )
    return SyntheticBenchmark(corpus, graph, queries, seed, records, spec)


def demo_benchmark(seed: int = 7) -> SyntheticBenchmark:
    """The fixed benchmark used by the ablation check and ``eval ablation`` by default."""
    return make_benchmark(seed, n_docs=120, n_queries=24, graph_fraction=0.5,
                          conflict_fraction=0.5, regulated_fraction=0.25)
