from __future__ import annotations

import random

import pytest

from qerag.errors import NoRequirements, TypeMismatch, UnknownNode
from qerag.graph import EdgeType, KnowledgeGraph, NodeType
from qerag.traceability import (
    LinkType,
    TraceabilityStore,
    TraceMatrix,
    coverage,
    impact,
    load_store,
    matrix,
    save_store,
)

from oracles import impact_by_enumeration

IMPACT_FORWARD = {"Impacts"}
IMPACT_REVERSE = {"DependsOn", "Requires"}


def req_case_graph(n_req=2, n_case=2):
    g = KnowledgeGraph()
    for i in range(1, n_req + 1):
        g.add_node(f"r{i}", NodeType.Requirement)
    for i in range(1, n_case + 1):
        g.add_node(f"c{i}", NodeType.TestCase)
    return g


def test_link_query_both_directions():
    g = req_case_graph()
    store = TraceabilityStore(g)
    tl = store.link("r1", "c1", LinkType.ReqToCase)
    assert store.forward("r1") == [tl]
    assert store.reverse("c1") == [tl]


def test_duplicate_returns_existing():
    store = TraceabilityStore(req_case_graph())
    a = store.link("r1", "c1", "ReqToCase")
    b = store.link("r1", "c1", "ReqToCase")
    assert a == b and len(store) == 1


def test_type_mismatch_and_unknown_node():
    store = TraceabilityStore(req_case_graph())
    with pytest.raises(TypeMismatch):
        store.link("r1", "r2", LinkType.ReqToCase)
    with pytest.raises(UnknownNode):
        store.link("r1", "zz", LinkType.ReqToCase)


def test_unlink_removes_both_directions():
    store = TraceabilityStore(req_case_graph())
    tl = store.link("r1", "c1", LinkType.ReqToCase)
    store.unlink(tl.id)
    assert store.forward("r1") == [] and store.reverse("c1") == []


def test_bidirectional_equivalence_10000_links():
    rng = random.Random(11)
    store = TraceabilityStore()  # no graph: endpoints unchecked, pure store behaviour
    nodes = [f"n{i:03d}" for i in range(300)]
    types = list(LinkType)
    made = []
    while len(store) < 10_000:
        made.append(store.link(rng.choice(nodes), rng.choice(nodes), rng.choice(types)))
    for tl in made:
        assert tl in store.forward(tl.src)
        assert tl in store.reverse(tl.dst)
    fwd = {t.id for n in nodes for t in store.forward(n)}
    rev = {t.id for n in nodes for t in store.reverse(n)}
    assert fwd == rev == {t.id for t in store.links()}


def test_matrix_by_hand():
    g = req_case_graph()
    store = TraceabilityStore(g)
    store.link("r1", "c1", LinkType.ReqToCase)
    store.link("r1", "c2", LinkType.ReqToCase)
    m = matrix(store, g)
    assert m.rows == ["r1", "r2"] and m.cols == ["c1", "c2"]
    assert m.row("r1") == ["X", "X"]
    assert m.row("r2") == ["", ""]
    assert m.to_csv() == "requirement_id,c1,c2\nr1,X,X\nr2,,\n"


def test_empty_store_matrix():
    g = req_case_graph()
    m = matrix(TraceabilityStore(g), g)
    assert m.cells == {} and all(m.row(r) == ["", ""] for r in m.rows)


@pytest.mark.parametrize("seed", range(5))
def test_matrix_fidelity_and_csv_round_trip(seed):
    rng = random.Random(seed)
    g = req_case_graph(8, 12)
    store = TraceabilityStore(g)
    for _ in range(30):
        store.link(f"r{rng.randint(1, 8)}", f"c{rng.randint(1, 12)}", LinkType.ReqToCase)
    m = matrix(store, g)
    for r in m.rows:
        for c in m.cols:
            assert (m.cell(r, c) != "") == store.has(r, c, LinkType.ReqToCase)
    assert TraceMatrix.from_csv(m.to_csv()) == m


def test_coverage():
    g = req_case_graph(4, 1)
    store = TraceabilityStore(g)
    assert coverage(store, g) == 0.0
    for r in ("r1", "r2", "r3"):
        store.link(r, "c1", LinkType.ReqToCase)
    assert coverage(store, g) == 0.75
    store.link("r4", "c1", LinkType.ReqToCase)
    assert coverage(store, g) == 1.0
    with pytest.raises(NoRequirements):
        coverage(store, KnowledgeGraph())


def test_store_round_trip(tmp_path):
    g = req_case_graph()
    store = TraceabilityStore(g)
    store.link("r1", "c1", LinkType.ReqToCase)
    store.link("r2", "c2", LinkType.ReqToCase)
    path = tmp_path / "trace.json"
    save_store(store, path)
    again = load_store(path, g)
    assert again.to_dict() == store.to_dict()


def test_impact_isolated():
    g = KnowledgeGraph()
    g.add_node("x", NodeType.Component)
    assert impact("x", g).affected == []
    with pytest.raises(UnknownNode):
        impact("nope", g)


def test_impact_chain_through_link():
    g = KnowledgeGraph()
    g.add_node("comp", NodeType.Component)
    g.add_node("req", NodeType.Requirement)
    g.add_node("case", NodeType.TestCase)
    g.add_edge("comp", "req", EdgeType.Impacts, 0.8)
    store = TraceabilityStore(g)
    store.link("req", "case", LinkType.ReqToCase)
    report = impact("comp", g, store)
    got = {a.node_id: a for a in report.affected}
    assert got["req"].impact_score == pytest.approx(0.56, abs=1e-12)
    assert got["case"].impact_score == pytest.approx(0.56, abs=1e-12)
    assert got["case"].path == ("comp", "req", "case")
    assert all(a.path[0] == "comp" for a in report.affected)


def test_impact_follows_reverse_dependencies():
    g = KnowledgeGraph()
    for n in ("base", "user", "req"):
        g.add_node(n, NodeType.Component if n != "req" else NodeType.Requirement)
    g.add_edge("user", "base", EdgeType.DependsOn)  # user depends on base
    g.add_edge("req", "user", EdgeType.Requires)
    report = impact("base", g)
    assert report.ids() == ["user", "req"]
    # 0.9 * 0.7, then * 0.9 * 0.7
    assert report.affected[1].impact_score == pytest.approx(0.9 * 0.7 * 0.9 * 0.7, abs=1e-12)


def _random_impact_graph(rng):
    g = KnowledgeGraph()
    ids = [f"n{i:02d}" for i in range(18)]
    for nid in ids:
        g.add_node(nid, rng.choice([NodeType.Component, NodeType.Requirement, NodeType.Configuration]))
    for _ in range(40):
        a, b = rng.sample(ids, 2)
        g.add_edge(a, b, rng.choice([EdgeType.Impacts, EdgeType.DependsOn, EdgeType.Requires, EdgeType.MapsTo]),
                   round(rng.uniform(0.1, 1.0), 4))
    return g, ids


@pytest.mark.parametrize("seed", range(25))
def test_impact_matches_path_enumeration(seed):
    rng = random.Random(seed)
    g, ids = _random_impact_graph(rng)
    changed = rng.choice(ids)
    depth = rng.randint(1, 4)
    edges = [(e.src, e.dst, e.type.value, e.weight) for e in g.edges()]
    want = impact_by_enumeration(ids, edges, changed, depth, 0.7, IMPACT_FORWARD, IMPACT_REVERSE)
    report = impact(changed, g, max_depth=depth)
    got = {a.node_id: a.impact_score for a in report.affected}
    assert set(got) == set(want)
    for nid, score in want.items():
        assert got[nid] == pytest.approx(score, abs=1e-12)
    keys = [(-a.impact_score, a.node_id) for a in report.affected]
    assert keys == sorted(keys)


@pytest.mark.parametrize("seed", range(10))
def test_impact_depth_monotone(seed):
    rng = random.Random(50 + seed)
    g, ids = _random_impact_graph(rng)
    changed = rng.choice(ids)
    prev: set[str] = set()
    for depth in range(0, 6):
        now = set(impact(changed, g, max_depth=depth).ids())
        assert prev <= now
        prev = now
