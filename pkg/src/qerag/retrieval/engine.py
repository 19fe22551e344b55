"""Four retrieval stages: keyword, vector, hybrid vector+graph, agentic."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from ..corpus import Corpus
from ..embedding import tokenize
from ..errors import IndexMissing
from ..graph import Direction, KnowledgeGraph
from ..vector_index import DEFAULT_THRESHOLD, VectorIndex, search
from .assembly import assemble_context
from .conflicts import ConflictParams
from .types import KEYWORD, VECTOR_HIT, ContextBundle, ContextItem, Origin, OriginKind, StageMode


@dataclass(frozen=True)
class RetrievalParams:
    alpha: float = 0.6
    gamma: float = 0.5
    depth: int = 2
    threshold: float = DEFAULT_THRESHOLD
    token_budget: int = 2000
    workers: int = 8
    k: int = 5
    direction: Direction = Direction.BOTH
    conflict: ConflictParams = field(default_factory=ConflictParams)

    def with_(self, **changes) -> "RetrievalParams":
        return replace(self, **changes)


@dataclass
class Indexes:
    corpus: Corpus
    vector: VectorIndex | None = None


def keyword_score(query: str, text: str) -> float:
    """Jaccard overlap of lower-cased word sets."""
    a, b = set(tokenize(query)), set(tokenize(text))
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


def hybrid_score(
    seed_score: float,
    hops: int,
    edge_weights: Sequence[float],
    alpha: float = 0.6,
    gamma: float = 0.5,
) -> float:
    """Graph share of a fused score: alpha * seed * gamma**hops * prod(weights)."""
    if hops < 1:
        raise ValueError("hops must be >= 1")
    if any(not 0.0 < w <= 1.0 for w in edge_weights):
        raise ValueError("edge weights must be in (0, 1]")
    return alpha * seed_score * gamma**hops * math.prod(edge_weights)


def _expand(
    g: KnowledgeGraph, start: str, depth: int, gamma: float, direction: Direction
) -> dict[str, tuple[float, tuple[str, ...], tuple[str, ...]]]:
    """Best decay factor gamma**h * prod(w) to every node within ``depth`` hops.

    Returns node -> (factor, path node ids, path edge types); the start node
    itself is excluded. Ties keep the lexicographically smallest node path.
    """
    best: dict[str, tuple[float, tuple[str, ...], tuple[str, ...]]] = {}
    layer = {start: (1.0, (start,), ())}
    for _ in range(depth):
        nxt: dict[str, tuple[float, tuple[str, ...], tuple[str, ...]]] = {}
        for u in sorted(layer):
            factor, nodes, types = layer[u]
            edges = []
            if direction in (Direction.OUT, Direction.BOTH):
                edges.extend((e.dst, e.weight, e.type.value) for e in g.out_edges(u))
            if direction in (Direction.IN, Direction.BOTH):
                edges.extend((e.src, e.weight, e.type.value) for e in g.in_edges(u))
            for v, w, t in edges:
                cand = (factor * gamma * w, nodes + (v,), types + (t,))
                cur = nxt.get(v)
                if cur is None or (-cand[0], cand[1], cand[2]) < (-cur[0], cur[1], cur[2]):
                    nxt[v] = cand
        for v, cand in nxt.items():
            if v == start:
                continue
            cur = best.get(v)
            if cur is None or (-cand[0], cand[1], cand[2]) < (-cur[0], cur[1], cur[2]):
                best[v] = cand
        layer = nxt
        if not layer:
            break
    return best


def _keyword_items(query: str, corpus: Corpus, k: int) -> list[ContextItem]:
    scored = [(keyword_score(query, c.text), c) for c in corpus]
    scored = [(s, c) for s, c in scored if s > 0]
    scored.sort(key=lambda sc: (-sc[0], sc[1].id))
    return [ContextItem.from_chunk(c, s, KEYWORD) for s, c in scored[:k]]


def _graph_items(
    seeds: Iterable[tuple[str | None, str, float]],
    corpus: Corpus,
    g: KnowledgeGraph,
    params: RetrievalParams,
) -> dict[str, ContextItem]:
    """Expand from (seed chunk, start node, seed score) triples."""
    out: dict[str, ContextItem] = {}

    def offer(chunk_id: str, score: float, origin: Origin) -> None:
        if chunk_id not in corpus or score <= 0:
            return
        cur = out.get(chunk_id)
        if cur is None or score > cur.score:
            out[chunk_id] = ContextItem.from_chunk(corpus.get(chunk_id), score, origin)

    for seed_chunk, start, seed_score in seeds:
        if seed_chunk is None:
            # pinned node: its own chunks join the context at zero hops
            for cid in sorted(g.node(start).chunk_refs):
                offer(cid, params.alpha * seed_score, Origin(OriginKind.GraphExpansion, None, (), (start,), 0))
        reached = _expand(g, start, params.depth, params.gamma, params.direction)
        for node_id in sorted(reached):
            factor, nodes, types = reached[node_id]
            score = params.alpha * seed_score * factor
            origin = Origin(OriginKind.GraphExpansion, seed_chunk, types, nodes, len(types))
            for cid in sorted(g.node(node_id).chunk_refs):
                if cid != seed_chunk:
                    offer(cid, score, origin)
    return out


def candidate_items(
    query: str,
    mode: StageMode | str,
    indexes: Indexes,
    graph: KnowledgeGraph | None = None,
    params: RetrievalParams | None = None,
    seed_nodes: Sequence[str] = (),
) -> list[ContextItem]:
    """Raw scored items for a mode, before conflict resolution and budgeting."""
    mode = StageMode.parse(mode)
    params = params or RetrievalParams()
    corpus = indexes.corpus
    if corpus is None:
        raise IndexMissing("corpus not loaded")

    if mode is StageMode.BasicRag:
        return _keyword_items(query, corpus, params.k)

    if indexes.vector is None:
        raise IndexMissing("vector index not built")
    hits = search(indexes.vector, query, params.k, params.threshold) if query.strip() else []
    if mode is StageMode.VectorSearch:
        return [ContextItem.from_chunk(corpus.get(h.chunk_id), h.score, VECTOR_HIT) for h in hits]

    if graph is None:
        raise IndexMissing("knowledge graph not loaded")
    for node_id in seed_nodes:
        graph.node(node_id)

    seeds: list[tuple[str | None, str, float]] = []
    for h in hits:
        for node_id in graph.nodes_for_chunk(h.chunk_id):
            seeds.append((h.chunk_id, node_id, h.score))
    seeds.extend((None, n, 1.0) for n in sorted(set(seed_nodes)))
    expanded = _graph_items(seeds, corpus, graph, params)

    items: dict[str, ContextItem] = {}
    for h in hits:
        direct = (1.0 - params.alpha) * h.score
        extra = expanded.pop(h.chunk_id).score if h.chunk_id in expanded else 0.0
        items[h.chunk_id] = ContextItem.from_chunk(corpus.get(h.chunk_id), direct + extra, VECTOR_HIT)
    items.update(expanded)
    return sorted(items.values(), key=lambda i: (-i.score, i.chunk_id))


def retrieve(
    query: str,
    mode: StageMode | str,
    indexes: Indexes,
    graph: KnowledgeGraph | None = None,
    params: RetrievalParams | None = None,
    seed_nodes: Sequence[str] = (),
) -> ContextBundle:
    """Retrieve and assemble a context bundle for ``query``.

    BasicRag scores every chunk by keyword overlap; VectorSearch returns the
    thresholded top-k vector hits; HybridRag (and Agentic, which shares its
    retrieval) fuses vector hits with graph expansion from the nodes owning
    those hits plus any pinned ``seed_nodes``.
    """
    mode = StageMode.parse(mode)
    params = params or RetrievalParams()
    items = candidate_items(query, mode, indexes, graph, params, seed_nodes)
    return assemble_context(
        items,
        params.token_budget,
        params.workers,
        query=query,
        mode=mode,
        graph=graph,
        conflict_params=params.conflict,
    )


def unassembled_bundle(
    query: str,
    mode: StageMode | str,
    indexes: Indexes,
    graph: KnowledgeGraph | None = None,
    params: RetrievalParams | None = None,
    seed_nodes: Sequence[str] = (),
) -> ContextBundle:
    """Candidates wrapped as a bundle with no conflict resolution or budget cut."""
    mode = StageMode.parse(mode)
    params = params or RetrievalParams()
    items = candidate_items(query, mode, indexes, graph, params, seed_nodes)
    return ContextBundle(query, mode, items, [], [], sum(i.n_tokens for i in items))
