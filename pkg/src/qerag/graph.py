"""Typed, weighted, directed property graph over testing entities."""

from __future__ import annotations

import enum
import heapq
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping

import numpy as np

from .errors import EmptyGraph, FormatViolation, IoFailure, NonConvergence, UnknownNode

PATH_EPSILON = 1e-6


class NodeType(str, enum.Enum):
    Requirement = "Requirement"
    TestCase = "TestCase"
    BusinessProcess = "BusinessProcess"
    Component = "Component"
    Interface = "Interface"
    ChangeRequest = "ChangeRequest"
    ExecutionResult = "ExecutionResult"
    Configuration = "Configuration"
    Regulation = "Regulation"


class EdgeType(str, enum.Enum):
    Requires = "Requires"
    Validates = "Validates"
    DependsOn = "DependsOn"
    Impacts = "Impacts"
    Covers = "Covers"
    ImplementedBy = "ImplementedBy"
    PartOf = "PartOf"
    PrecededBy = "PrecededBy"
    InterfacesWith = "InterfacesWith"
    MapsTo = "MapsTo"
    DerivedFrom = "DerivedFrom"
    Executes = "Executes"
    Configures = "Configures"
    Supersedes = "Supersedes"
    ConflictsWith = "ConflictsWith"

    @property
    def default_weight(self) -> float:
        return DEFAULT_EDGE_WEIGHTS[self]


DEFAULT_EDGE_WEIGHTS: dict[EdgeType, float] = {t: 0.6 for t in EdgeType}
DEFAULT_EDGE_WEIGHTS.update(
    {
        EdgeType.Requires: 0.9,
        EdgeType.DependsOn: 0.9,
        EdgeType.Validates: 0.85,
        EdgeType.Covers: 0.85,
        EdgeType.Impacts: 0.8,
        EdgeType.MapsTo: 0.8,
    }
)


class Direction(str, enum.Enum):
    OUT = "out"
    IN = "in"
    BOTH = "both"


def _parse_enum(cls, value, what: str):
    if isinstance(value, cls):
        return value
    try:
        return cls(value)
    except ValueError:
        raise FormatViolation(f"unknown {what}: {value!r}") from None


@dataclass
class GraphNode:
    id: str
    type: NodeType
    label: str = ""
    attrs: dict[str, str] = field(default_factory=dict)
    chunk_refs: set[str] = field(default_factory=set)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "type": self.type.value,
            "label": self.label,
            "attrs": dict(sorted(self.attrs.items())),
            "chunk_refs": sorted(self.chunk_refs),
        }


@dataclass(frozen=True)
class GraphEdge:
    src: str
    dst: str
    type: EdgeType
    weight: float

    def to_dict(self) -> dict[str, Any]:
        return {"src": self.src, "dst": self.dst, "type": self.type.value, "weight": self.weight}


EdgeKey = tuple[str, str, EdgeType]


class KnowledgeGraph:
    """Directed multigraph; parallel edges between a pair must differ in type."""

    def __init__(self, edge_weights: Mapping[EdgeType, float] | None = None):
        self.edge_weights = dict(DEFAULT_EDGE_WEIGHTS)
        if edge_weights:
            for t, w in edge_weights.items():
                t = _parse_enum(EdgeType, t, "edge type")
                if not 0.0 < float(w) <= 1.0:
                    raise ValueError(f"default weight for {t.value} must be in (0, 1]")
                self.edge_weights[t] = float(w)
        self._nodes: dict[str, GraphNode] = {}
        self._edges: dict[EdgeKey, float] = {}
        self._out: dict[str, set[EdgeKey]] = {}
        self._in: dict[str, set[EdgeKey]] = {}

    # -- mutation ----------------------------------------------------------

    def add_node(
        self,
        node_id: str,
        type: NodeType | str,
        label: str = "",
        attrs: Mapping[str, str] | None = None,
        chunk_refs: Iterable[str] = (),
    ) -> GraphNode:
        ntype = _parse_enum(NodeType, type, "node type")
        if node_id in self._nodes:
            node = self._nodes[node_id]
            if node.type is not ntype:
                raise FormatViolation(f"node {node_id} already exists with type {node.type.value}")
            if label:
                node.label = label
            node.attrs.update(attrs or {})
            node.chunk_refs.update(chunk_refs)
            return node
        node = GraphNode(node_id, ntype, label, dict(attrs or {}), set(chunk_refs))
        self._nodes[node_id] = node
        self._out[node_id] = set()
        self._in[node_id] = set()
        return node

    def add_edge(self, src: str, dst: str, type: EdgeType | str, weight: float | None = None) -> GraphEdge:
        etype = _parse_enum(EdgeType, type, "edge type")
        self._require(src)
        self._require(dst)
        w = self.edge_weights[etype] if weight is None else float(weight)
        if not 0.0 < w <= 1.0:
            raise ValueError(f"edge weight must be in (0, 1], got {w}")
        key = (src, dst, etype)
        self._edges[key] = w
        self._out[src].add(key)
        self._in[dst].add(key)
        return GraphEdge(src, dst, etype, w)

    def remove_edge(self, src: str, dst: str, type: EdgeType | str) -> None:
        key = (src, dst, _parse_enum(EdgeType, type, "edge type"))
        if key not in self._edges:
            raise KeyError(key)
        del self._edges[key]
        self._out[src].discard(key)
        self._in[dst].discard(key)

    def remove_node(self, node_id: str) -> None:
        self._require(node_id)
        for key in list(self._out[node_id] | self._in[node_id]):
            self.remove_edge(*key)
        del self._nodes[node_id], self._out[node_id], self._in[node_id]

    # -- queries -----------------------------------------------------------

    def _require(self, node_id: str) -> GraphNode:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def node(self, node_id: str) -> GraphNode:
        return self._require(node_id)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def nodes(self, type: NodeType | None = None) -> list[GraphNode]:
        """Nodes in ascending id order, optionally filtered by type."""
        return [self._nodes[n] for n in sorted(self._nodes) if type is None or self._nodes[n].type is type]

    def node_ids(self) -> list[str]:
        return sorted(self._nodes)

    def edges(self) -> Iterator[GraphEdge]:
        for key in sorted(self._edges, key=lambda k: (k[0], k[1], k[2].value)):
            yield GraphEdge(key[0], key[1], key[2], self._edges[key])

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def weight(self, src: str, dst: str, type: EdgeType) -> float | None:
        return self._edges.get((src, dst, type))

    def out_edges(self, node_id: str) -> list[GraphEdge]:
        self._require(node_id)
        return [GraphEdge(*k, self._edges[k]) for k in sorted(self._out[node_id], key=lambda k: (k[1], k[2].value))]

    def in_edges(self, node_id: str) -> list[GraphEdge]:
        self._require(node_id)
        return [GraphEdge(*k, self._edges[k]) for k in sorted(self._in[node_id], key=lambda k: (k[0], k[2].value))]

    def successors(self, node_id: str, direction: Direction | str = Direction.OUT) -> list[str]:
        """Distinct adjacent node ids in ascending order."""
        direction = Direction(direction)
        self._require(node_id)
        found: set[str] = set()
        if direction in (Direction.OUT, Direction.BOTH):
            found.update(k[1] for k in self._out[node_id])
        if direction in (Direction.IN, Direction.BOTH):
            found.update(k[0] for k in self._in[node_id])
        return sorted(found)

    def nodes_for_chunk(self, chunk_id: str) -> list[str]:
        return sorted(n.id for n in self._nodes.values() if chunk_id in n.chunk_refs)

    def chunk_owner_map(self) -> dict[str, list[str]]:
        owners: dict[str, list[str]] = {}
        for nid in sorted(self._nodes):
            for cid in self._nodes[nid].chunk_refs:
                owners.setdefault(cid, []).append(nid)
        return owners

    def check_integrity(self) -> None:
        for src, dst, _ in self._edges:
            if src not in self._nodes or dst not in self._nodes:
                raise FormatViolation(f"dangling edge {src}->{dst}")

    # -- (de)serialisation --------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": [n.to_dict() for n in self.nodes()],
            "edges": [e.to_dict() for e in self.edges()],
        }

    def merge_dict(self, data: Any) -> None:
        """Strictly validate an interchange document and merge it into this graph."""
        if not isinstance(data, dict) or set(data) != {"nodes", "edges"}:
            raise FormatViolation("graph document must be an object with exactly 'nodes' and 'edges'")
        if not isinstance(data["nodes"], list) or not isinstance(data["edges"], list):
            raise FormatViolation("'nodes' and 'edges' must be arrays")
        seen: set[str] = set()
        for raw in data["nodes"]:
            if not isinstance(raw, dict) or set(raw) != {"id", "type", "label", "attrs", "chunk_refs"}:
                raise FormatViolation(f"bad node record: {raw!r}")
            if not isinstance(raw["id"], str) or not raw["id"]:
                raise FormatViolation(f"node id must be a non-empty string: {raw!r}")
            if raw["id"] in seen:
                raise FormatViolation(f"duplicate node id: {raw['id']}")
            seen.add(raw["id"])
            if not isinstance(raw["label"], str):
                raise FormatViolation(f"node {raw['id']}: label must be a string")
            attrs = raw["attrs"]
            if not isinstance(attrs, dict) or not all(
                isinstance(k, str) and isinstance(v, str) for k, v in attrs.items()
            ):
                raise FormatViolation(f"node {raw['id']}: attrs must map strings to strings")
            refs = raw["chunk_refs"]
            if not isinstance(refs, list) or not all(isinstance(r, str) for r in refs):
                raise FormatViolation(f"node {raw['id']}: chunk_refs must be a list of strings")
            self.add_node(raw["id"], _parse_enum(NodeType, raw["type"], "node type"), raw["label"], attrs, refs)
        seen_edges: set[tuple] = set()
        for raw in data["edges"]:
            if not isinstance(raw, dict) or set(raw) != {"src", "dst", "type", "weight"}:
                raise FormatViolation(f"bad edge record: {raw!r}")
            etype = _parse_enum(EdgeType, raw["type"], "edge type")
            key = (raw["src"], raw["dst"], etype)
            if key in seen_edges:
                raise FormatViolation(f"duplicate edge: {raw!r}")
            seen_edges.add(key)
            w = raw["weight"]
            if not isinstance(w, (int, float)) or isinstance(w, bool) or not 0.0 < w <= 1.0:
                raise FormatViolation(f"edge weight must be a number in (0, 1]: {raw!r}")
            if raw["src"] not in self._nodes or raw["dst"] not in self._nodes:
                raise FormatViolation(f"dangling edge: {raw!r}")
            self.add_edge(raw["src"], raw["dst"], etype, float(w))

    @classmethod
    def from_dict(cls, data: Any, edge_weights: Mapping[EdgeType, float] | None = None) -> "KnowledgeGraph":
        g = cls(edge_weights)
        g.merge_dict(data)
        return g

    def copy(self) -> "KnowledgeGraph":
        g = KnowledgeGraph(self.edge_weights)
        g.merge_dict(self.to_dict())
        return g

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def save_graph(g: KnowledgeGraph, path: str | Path) -> None:
    try:
        Path(path).write_text(json.dumps(g.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_graph(path: str | Path, edge_weights: Mapping[EdgeType, float] | None = None) -> KnowledgeGraph:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatViolation(f"{path}: invalid JSON: {exc}") from exc
    return KnowledgeGraph.from_dict(data, edge_weights)


# ---------------------------------------------------------------------------
# Traversals
# ---------------------------------------------------------------------------


def bfs(
    g: KnowledgeGraph, start: str, max_depth: int, direction: Direction | str = Direction.OUT
) -> list[tuple[str, int]]:
    """Level-order traversal; each node appears once at its minimum depth."""
    g.node(start)
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    out = [(start, 0)]
    seen = {start}
    frontier = [start]
    for depth in range(1, max_depth + 1):
        nxt: set[str] = set()
        for u in frontier:
            for v in g.successors(u, direction):
                if v not in seen:
                    nxt.add(v)
        if not nxt:
            break
        level = sorted(nxt)
        seen.update(level)
        out.extend((v, depth) for v in level)
        frontier = level
    return out


def dfs(g: KnowledgeGraph, start: str, max_depth: int, direction: Direction | str = Direction.OUT) -> list[str]:
    """Depth-limited preorder; neighbours are expanded in ascending id order."""
    g.node(start)
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    order: list[str] = []
    seen: set[str] = set()
    stack: list[tuple[str, int]] = [(start, 0)]
    while stack:
        u, depth = stack.pop()
        if u in seen:
            continue
        seen.add(u)
        order.append(u)
        if depth < max_depth:
            for v in reversed(g.successors(u, direction)):
                if v not in seen:
                    stack.append((v, depth + 1))
    return order


def edge_cost(weight: float) -> float:
    return 1.0 - weight + PATH_EPSILON


def shortest_path(g: KnowledgeGraph, src: str, dst: str) -> tuple[list[str], float] | None:
    """Minimum-cost directed path under cost(edge) = 1 - weight + 1e-6.

    Returns ``None`` when ``dst`` is unreachable. Equal-cost paths are broken
    by the lexicographically smallest node-id sequence.
    """
    g.node(src)
    g.node(dst)
    if src == dst:
        return [src], 0.0
    heap: list[tuple[float, tuple[str, ...]]] = [(0.0, (src,))]
    settled: set[str] = set()
    best: dict[str, float] = {src: 0.0}
    while heap:
        cost, path = heapq.heappop(heap)
        u = path[-1]
        if u in settled:
            continue
        settled.add(u)
        if u == dst:
            return list(path), cost
        step: dict[str, float] = {}
        for e in g.out_edges(u):
            c = edge_cost(e.weight)
            if e.dst not in step or c < step[e.dst]:
                step[e.dst] = c
        for v, c in step.items():
            if v in settled:
                continue
            nc = cost + c
            if nc <= best.get(v, float("inf")):
                best[v] = nc
                heapq.heappush(heap, (nc, path + (v,)))
    return None


def pagerank(
    g: KnowledgeGraph,
    damping: float = 0.85,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> dict[str, float]:
    """Weighted PageRank by power iteration.

    Out-going transition probabilities are proportional to edge weight
    (parallel edges add up); rank held by dangling nodes is spread uniformly.
    Raises :class:`NonConvergence` carrying the last iterate if the L1 change
    is still >= ``tol`` after ``max_iter`` iterations.
    """
    ids = g.node_ids()
    n = len(ids)
    if n == 0:
        raise EmptyGraph("pagerank of an empty graph")
    pos = {nid: i for i, nid in enumerate(ids)}
    src_idx, dst_idx, wts = [], [], []
    for e in g.edges():
        src_idx.append(pos[e.src])
        dst_idx.append(pos[e.dst])
        wts.append(e.weight)
    src_a = np.asarray(src_idx, dtype=np.int64)
    dst_a = np.asarray(dst_idx, dtype=np.int64)
    w_a = np.asarray(wts, dtype=np.float64)
    out_w = np.zeros(n)
    np.add.at(out_w, src_a, w_a)
    dangling = out_w == 0.0
    share = np.zeros_like(w_a)
    if len(w_a):
        share = w_a / out_w[src_a]

    rank = np.full(n, 1.0 / n)
    delta = float("inf")
    for it in range(1, max_iter + 1):
        nxt = np.zeros(n)
        np.add.at(nxt, dst_a, rank[src_a] * share)
        nxt = damping * (nxt + rank[dangling].sum() / n) + (1.0 - damping) / n
        nxt /= nxt.sum()
        delta = float(np.abs(nxt - rank).sum())
        rank = nxt
        if delta < tol:
            return {nid: float(rank[pos[nid]]) for nid in ids}
    raise NonConvergence({nid: float(rank[pos[nid]]) for nid in ids}, max_iter, delta)


def neighbors_by_type(
    g: KnowledgeGraph,
    node: str,
    types: Iterable[EdgeType | str] | None = None,
    direction: Direction | str = Direction.OUT,
) -> list[str]:
    """Node ids adjacent to ``node`` through edges of the given types, ascending."""
    g.node(node)
    direction = Direction(direction)
    wanted = None if types is None else {_parse_enum(EdgeType, t, "edge type") for t in types}
    found: set[str] = set()
    if direction in (Direction.OUT, Direction.BOTH):
        found.update(e.dst for e in g.out_edges(node) if wanted is None or e.type in wanted)
    if direction in (Direction.IN, Direction.BOTH):
        found.update(e.src for e in g.in_edges(node) if wanted is None or e.type in wanted)
    return sorted(found)


def map_old_to_new(g: KnowledgeGraph, old_component: str) -> list[str]:
    """Targets of outgoing MapsTo edges, by descending weight then id."""
    edges = [e for e in g.out_edges(old_component) if e.type is EdgeType.MapsTo]
    return [e.dst for e in sorted(edges, key=lambda e: (-e.weight, e.dst))]
