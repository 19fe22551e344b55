from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qerag.corpus import ingest
from qerag.errors import IndexMissing, UnknownNode
from qerag.graph import EdgeType, KnowledgeGraph, NodeType
from qerag.retrieval import (
    Indexes,
    OriginKind,
    RetrievalParams,
    StageMode,
    assemble_context,
    hybrid_score,
    keyword_score,
    retrieve,
)
from qerag.vector_index import build_index, search

from helpers import item
from oracles import jaccard

SEED_TEXT = "kovapi rutemo salidu bragen fostilo mevaru"
ANSWER_TEXT = "zentwal quorpix huddlemay vimbrosk tarquell ojenfrid"


@pytest.fixture
def graph_world():
    corpus = ingest(
        [
            {"kind": "SapDoc", "doc_id": "SEED", "text": SEED_TEXT},
            {"kind": "SapDoc", "doc_id": "ANS", "text": ANSWER_TEXT},
            {"kind": "SapDoc", "doc_id": "OTHER", "text": "plimsour gradnet vexhollow"},
        ]
    )
    g = KnowledgeGraph()
    for doc in ("SEED", "ANS", "OTHER"):
        g.add_node(doc, NodeType.Component, chunk_refs=[f"{doc}#0"])
    g.add_edge("SEED", "ANS", EdgeType.DependsOn)
    return Indexes(corpus, build_index(corpus)), g


def test_keyword_score_examples():
    assert keyword_score("a b c", "a b c") == 1.0
    assert keyword_score("a b", "c d") == 0.0
    assert keyword_score("a b c", "b c d") == 0.5
    assert keyword_score("Alpha beta", "BETA gamma") == jaccard(["alpha", "beta"], ["beta", "gamma"])


def test_hybrid_score_examples():
    assert hybrid_score(1.0, 1, [1.0]) == pytest.approx(0.30, abs=1e-15)
    one = hybrid_score(0.9, 1, [1.0])
    two = hybrid_score(0.9, 2, [1.0, 1.0])
    assert two == pytest.approx(one / 2, abs=1e-15)
    assert hybrid_score(1.0, 60, [1.0] * 60) < 1e-18
    with pytest.raises(ValueError):
        hybrid_score(1.0, 0, [])


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 1.0), st.lists(st.floats(0.01, 1.0), min_size=1, max_size=6))
def test_hybrid_score_decreasing_in_hops(seed, weights):
    prev = None
    for h in range(1, len(weights) + 1):
        s = hybrid_score(seed, h, weights[:h])
        if prev is not None:
            assert s < prev
        prev = s


def test_vector_mode_is_pass_through(graph_world):
    indexes, g = graph_world
    bundle = retrieve(SEED_TEXT, StageMode.VectorSearch, indexes, g)
    hits = search(indexes.vector, SEED_TEXT, 5)
    assert [(i.chunk_id, i.score) for i in bundle.items] == [(h.chunk_id, h.score) for h in hits]
    assert all(i.origin.kind is OriginKind.VectorHit for i in bundle.items)


def test_hybrid_reaches_answer_only_through_graph(graph_world):
    indexes, g = graph_world
    assert not set(SEED_TEXT.split()) & set(ANSWER_TEXT.split())
    vector = retrieve(SEED_TEXT, StageMode.VectorSearch, indexes, g)
    assert "ANS#0" not in vector.chunk_ids()
    hybrid = retrieve(SEED_TEXT, StageMode.HybridRag, indexes, g)
    answer = next(i for i in hybrid.items if i.chunk_id == "ANS#0")
    assert answer.origin.kind is OriginKind.GraphExpansion
    assert answer.origin.seed_chunk == "SEED#0"
    assert answer.origin.path_types == ("DependsOn",)
    assert answer.origin.hops == 1
    # alpha * seed * gamma * weight; the seed is the exact text so its score is 1
    assert answer.score == pytest.approx(0.6 * 1.0 * 0.5 * 0.9, abs=1e-9)
    seed = next(i for i in hybrid.items if i.chunk_id == "SEED#0")
    assert seed.score == pytest.approx(0.4, abs=1e-9)


def test_basic_mode_zero_overlap_is_empty(graph_world):
    indexes, g = graph_world
    assert retrieve("nothing matches here", StageMode.BasicRag, indexes, g).items == []


def test_basic_mode_ranks_by_jaccard(graph_world):
    indexes, g = graph_world
    bundle = retrieve("kovapi rutemo zentwal", StageMode.BasicRag, indexes, g)
    assert bundle.chunk_ids() == ["SEED#0", "ANS#0"]
    assert bundle.items[0].score == pytest.approx(2 / 7)
    assert all(i.origin.kind is OriginKind.Keyword for i in bundle.items)


def test_missing_index_and_pinned_unknown_node(graph_world):
    indexes, g = graph_world
    with pytest.raises(IndexMissing):
        retrieve("x", StageMode.VectorSearch, Indexes(indexes.corpus, None), g)
    with pytest.raises(UnknownNode):
        retrieve("x", StageMode.HybridRag, indexes, g, seed_nodes=["NOPE"])


def test_retrieve_deterministic(graph_world):
    indexes, g = graph_world
    a = retrieve(SEED_TEXT, StageMode.HybridRag, indexes, g)
    b = retrieve(SEED_TEXT, StageMode.HybridRag, indexes, g)
    assert a.to_dict() == b.to_dict()


def test_provenance_points_at_corpus(graph_world):
    indexes, g = graph_world
    for mode in StageMode:
        for it in retrieve(SEED_TEXT, mode, indexes, g).items:
            chunk = indexes.corpus.get(it.chunk_id)
            assert it.provenance.source == chunk.source
            assert it.provenance.credibility == chunk.credibility


def _ten_items():
    # ten 10-token items with scores 0.10 .. 1.00
    return [item(f"c{i:02d}", " ".join(f"t{i}x{j}" for j in range(10)), score=(i + 1) / 10) for i in range(10)]


def test_budget_keeps_top_four():
    bundle = assemble_context(_ten_items(), token_budget=45)
    assert bundle.chunk_ids() == ["c09", "c08", "c07", "c06"]
    assert bundle.total_tokens == 40


def test_budget_below_first_chunk():
    bundle = assemble_context(_ten_items(), token_budget=9)
    assert bundle.items == [] and bundle.token_budget == 9


def test_workers_out_of_range():
    with pytest.raises(ValueError):
        assemble_context(_ten_items(), 100, workers=9)


def test_two_hundred_items_one_vs_eight_workers():
    items = [item(f"c{i:03d}", f"w{i} " * (i % 7 + 1), score=((i * 37) % 101) / 101 + 0.001) for i in range(200)]
    one = assemble_context(items, 500, workers=1)
    eight = assemble_context(items, 500, workers=8)
    assert one == eight


_items = st.lists(
    st.tuples(st.integers(0, 30), st.floats(0.01, 1.0), st.integers(1, 8)), min_size=0, max_size=40
).map(lambda rows: [item(f"c{cid:02d}", "tok " * n, score=s) for cid, s, n in rows])


@settings(max_examples=100, deadline=None)
@given(_items, st.integers(0, 120), st.integers(1, 8))
def test_worker_count_invariance(items, budget, workers):
    assert assemble_context(items, budget, workers=workers) == assemble_context(items, budget, workers=1)


@settings(max_examples=100, deadline=None)
@given(_items, st.integers(0, 120))
def test_bundle_invariants(items, budget):
    bundle = assemble_context(items, budget)
    assert bundle.total_tokens <= budget
    keys = [(-i.score, i.chunk_id) for i in bundle.items]
    assert keys == sorted(keys)
    assert len(set(bundle.chunk_ids())) == len(bundle.items)


def test_params_defaults():
    p = RetrievalParams()
    assert (p.alpha, p.gamma, p.depth, p.threshold) == (0.6, 0.5, 2, 0.82)
