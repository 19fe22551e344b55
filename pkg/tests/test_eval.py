from __future__ import annotations

import json

import pytest

from qerag.embedding import make_embedder
from qerag.eval import (
    ABLATIONS,
    REFERENCE_ABLATION_DROP,
    REFERENCE_STAGE_ACCURACY,
    demo_benchmark,
    make_benchmark,
    run_ablation,
    run_stages,
    score_ranking,
    to_json,
    token_overlap,
)
from qerag.retrieval import StageMode
from qerag.vector_index import DEFAULT_THRESHOLD

from oracles import cosine


@pytest.fixture(scope="module")
def small_bench():
    return make_benchmark(3, n_docs=60, n_queries=12, graph_fraction=0.5)


@pytest.fixture(scope="module")
def demo():
    return demo_benchmark()


def test_same_seed_same_benchmark():
    a = make_benchmark(5, n_docs=40, n_queries=8)
    b = make_benchmark(5, n_docs=40, n_queries=8)
    assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)


def test_graph_fraction_zero():
    bench = make_benchmark(2, n_docs=30, n_queries=6, graph_fraction=0.0)
    assert bench.graph_queries() == []


def test_n_docs_is_a_floor(small_bench):
    assert len({c.doc_id for c in small_bench.corpus}) >= 60


def test_invalid_arguments():
    with pytest.raises(ValueError):
        make_benchmark(1, n_docs=0)
    with pytest.raises(ValueError):
        make_benchmark(1, graph_fraction=1.5)


def test_graph_queries_share_nothing_with_answers(small_bench):
    embedder = make_embedder(small_bench.spec)
    graph_qs = small_bench.graph_queries()
    assert len(graph_qs) == 6
    for q in graph_qs:
        assert q.relevant
        for cid in q.relevant:
            text = small_bench.corpus.get(cid).text
            # independent overlap check on whitespace tokens
            assert not set(q.text.lower().split()) & set(text.lower().split())
            assert not token_overlap(q.text, text)
            assert cosine(embedder.embed(q.text).tolist(), embedder.embed(text).tolist()) < DEFAULT_THRESHOLD


def test_every_query_has_relevant_chunks(small_bench):
    assert all(q.relevant and all(c in small_bench.corpus for c in q.relevant) for q in small_bench.queries)


def test_score_ranking_by_hand():
    assert score_ranking(["a", "b", "c", "d", "e"], ["b", "z"], 5) == (0.2, 0.5)
    assert score_ranking([], ["a"], 5) == (0.0, 0.0)


def test_stage_report(small_bench):
    report = run_stages(small_bench, k=5)
    for m in StageMode:
        s = report.stages[m]
        assert 0.0 <= s.precision <= 1.0 and 0.0 <= s.recall <= 1.0 and 0.0 <= s.f1 <= 1.0
    assert report.recall("hybrid", graph_only=True) > report.recall("vector", graph_only=True)
    assert report.stages[StageMode.Agentic].success_rate is not None
    assert report.reference == REFERENCE_STAGE_ACCURACY
    assert "reference" in report.table()


def test_f1_monotone(small_bench):
    report = run_stages(small_bench, k=5)
    f1 = [report.stages[m].f1 for m in (StageMode.BasicRag, StageMode.VectorSearch, StageMode.HybridRag)]
    assert f1 == sorted(f1)


def test_graph_fraction_zero_hybrid_equals_vector():
    bench = make_benchmark(4, n_docs=40, n_queries=8, graph_fraction=0.0)
    report = run_stages(bench, k=5)
    assert report.recall("hybrid") == report.recall("vector")


def test_reference_figures_are_display_only():
    assert REFERENCE_STAGE_ACCURACY[StageMode.Agentic] == 94.8
    assert REFERENCE_STAGE_ACCURACY[StageMode.BasicRag] == 65.2
    assert REFERENCE_ABLATION_DROP == {"no_agents": 12.3, "no_graph": 15.7, "no_context_assembly": 18.2,
                                       "no_traceability": 8.9}


def test_ablation_shape_and_full_delta(demo):
    report = run_ablation(demo)
    assert [r.name for r in report.rows] == list(ABLATIONS)
    assert len(report.rows) == 5
    full = report.row("full")
    assert full.recall_delta == 0.0 and full.success_delta == 0.0


def test_no_graph_delta_is_graph_recall_mass(demo):
    ablation = run_ablation(demo)
    stages = run_stages(demo)
    share = len(demo.graph_queries()) / len(demo.queries)
    mass = share * (stages.recall("hybrid", True) - stages.recall("vector", True))
    assert mass > 0
    assert -ablation.row("no_graph").recall_delta == pytest.approx(mass, abs=1e-12)


def test_reports_serialise_deterministically(demo):
    a = to_json(run_ablation(demo))
    b = to_json(run_ablation(demo))
    assert a == b
    assert json.loads(a)["report"] == "ablation"
