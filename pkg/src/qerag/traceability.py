"""Bidirectional trace-link store, traceability matrix, coverage and change impact."""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .errors import FormatViolation, IoFailure, NoRequirements, TypeMismatch, UnknownNode
from .graph import EdgeType, KnowledgeGraph, NodeType

IMPACT_DECAY = 0.7
IMPACT_DEPTH = 4


class LinkType(str, enum.Enum):
    ReqToCase = "ReqToCase"
    CaseToResult = "CaseToResult"
    LogicToScenario = "LogicToScenario"
    ChangeToImpact = "ChangeToImpact"


_LOGIC_TYPES = frozenset({NodeType.BusinessProcess, NodeType.Component, NodeType.Configuration})
_ENDPOINTS: dict[LinkType, tuple[frozenset[NodeType] | None, frozenset[NodeType] | None]] = {
    LinkType.ReqToCase: (frozenset({NodeType.Requirement}), frozenset({NodeType.TestCase})),
    LinkType.CaseToResult: (frozenset({NodeType.TestCase}), frozenset({NodeType.ExecutionResult})),
    LinkType.LogicToScenario: (_LOGIC_TYPES, frozenset({NodeType.TestCase})),
    LinkType.ChangeToImpact: (frozenset({NodeType.ChangeRequest}), None),
}


@dataclass(frozen=True)
class TraceLink:
    id: str
    src: str
    dst: str
    link_type: LinkType
    created_at: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "src": self.src,
            "dst": self.dst,
            "link_type": self.link_type.value,
            "created_at": self.created_at,
        }


def link_id(src: str, dst: str, link_type: LinkType) -> str:
    digest = hashlib.sha1(f"{src}\x1f{dst}\x1f{link_type.value}".encode("utf-8")).hexdigest()
    return f"TL-{digest[:12]}"


class TraceabilityStore:
    """Link store kept apart from the knowledge graph's domain edges.

    ``created_at`` is a logical clock (insertion sequence number), which keeps
    persisted stores reproducible.
    """

    def __init__(self, graph: KnowledgeGraph | None = None):
        self.graph = graph
        self._links: dict[str, TraceLink] = {}
        self._by_src: dict[str, set[str]] = {}
        self._by_dst: dict[str, set[str]] = {}
        self._clock = 0

    def __len__(self) -> int:
        return len(self._links)

    def __contains__(self, link_id_: object) -> bool:
        return link_id_ in self._links

    def _check_endpoints(self, src: str, dst: str, link_type: LinkType) -> None:
        if self.graph is None:
            return
        src_t = self.graph.node(src).type
        dst_t = self.graph.node(dst).type
        allowed_src, allowed_dst = _ENDPOINTS[link_type]
        if allowed_src is not None and src_t not in allowed_src:
            raise TypeMismatch(f"{link_type.value} cannot start at a {src_t.value} node ({src})")
        if allowed_dst is not None and dst_t not in allowed_dst:
            raise TypeMismatch(f"{link_type.value} cannot end at a {dst_t.value} node ({dst})")

    def link(self, src: str, dst: str, link_type: LinkType | str) -> TraceLink:
        """Create a link, or return the existing one for the same triple."""
        link_type = LinkType(link_type)
        lid = link_id(src, dst, link_type)
        if lid in self._links:
            return self._links[lid]
        self._check_endpoints(src, dst, link_type)
        self._clock += 1
        return self._insert(TraceLink(lid, src, dst, link_type, self._clock))

    def _insert(self, tl: TraceLink) -> TraceLink:
        self._links[tl.id] = tl
        self._by_src.setdefault(tl.src, set()).add(tl.id)
        self._by_dst.setdefault(tl.dst, set()).add(tl.id)
        return tl

    def unlink(self, lid: str) -> None:
        tl = self._links.pop(lid)
        self._by_src[tl.src].discard(lid)
        self._by_dst[tl.dst].discard(lid)

    def get(self, lid: str) -> TraceLink:
        return self._links[lid]

    def links(self, link_type: LinkType | None = None) -> list[TraceLink]:
        out = sorted(self._links.values(), key=lambda t: (t.created_at, t.id))
        return [t for t in out if link_type is None or t.link_type is link_type]

    def forward(self, src: str, link_type: LinkType | None = None) -> list[TraceLink]:
        """Links starting at ``src``, ordered by destination id."""
        found = (self._links[i] for i in self._by_src.get(src, ()))
        return sorted((t for t in found if link_type is None or t.link_type is link_type), key=lambda t: (t.dst, t.id))

    def reverse(self, dst: str, link_type: LinkType | None = None) -> list[TraceLink]:
        """Links ending at ``dst``, ordered by source id."""
        found = (self._links[i] for i in self._by_dst.get(dst, ()))
        return sorted((t for t in found if link_type is None or t.link_type is link_type), key=lambda t: (t.src, t.id))

    def has(self, src: str, dst: str, link_type: LinkType) -> bool:
        return link_id(src, dst, link_type) in self._links

    def to_dict(self) -> dict[str, Any]:
        return {"links": [t.to_dict() for t in self.links()]}

    @classmethod
    def from_dict(cls, data: Any, graph: KnowledgeGraph | None = None) -> "TraceabilityStore":
        if not isinstance(data, dict) or set(data) != {"links"} or not isinstance(data["links"], list):
            raise FormatViolation("trace store must be an object with a 'links' array")
        store = cls(graph)
        for raw in data["links"]:
            if not isinstance(raw, dict) or set(raw) != {"id", "src", "dst", "link_type", "created_at"}:
                raise FormatViolation(f"bad trace link record: {raw!r}")
            try:
                lt = LinkType(raw["link_type"])
            except ValueError:
                raise FormatViolation(f"unknown link type: {raw['link_type']!r}") from None
            if raw["id"] != link_id(raw["src"], raw["dst"], lt) or raw["id"] in store._links:
                raise FormatViolation(f"inconsistent or duplicate link id: {raw['id']}")
            try:
                store._check_endpoints(raw["src"], raw["dst"], lt)
            except (UnknownNode, TypeMismatch) as exc:
                raise FormatViolation(str(exc)) from exc
            store._insert(TraceLink(raw["id"], raw["src"], raw["dst"], lt, int(raw["created_at"])))
            store._clock = max(store._clock, int(raw["created_at"]))
        return store


def save_store(store: TraceabilityStore, path: str | Path) -> None:
    try:
        Path(path).write_text(json.dumps(store.to_dict(), indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_store(path: str | Path, graph: KnowledgeGraph | None = None) -> TraceabilityStore:
    p = Path(path)
    if not p.exists():
        return TraceabilityStore(graph)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatViolation(f"{path}: invalid JSON: {exc}") from exc
    return TraceabilityStore.from_dict(data, graph)


# ---------------------------------------------------------------------------
# Matrix and coverage
# ---------------------------------------------------------------------------


@dataclass
class TraceMatrix:
    rows: list[str]
    cols: list[str]
    cells: dict[tuple[str, str], str] = field(default_factory=dict)

    def cell(self, requirement: str, case: str) -> str:
        return self.cells.get((requirement, case), "")

    def row(self, requirement: str) -> list[str]:
        return [self.cell(requirement, c) for c in self.cols]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["requirement_id", *self.cols])
        for r in self.rows:
            writer.writerow([r, *self.row(r)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TraceMatrix":
        reader = list(csv.reader(io.StringIO(text)))
        if not reader or not reader[0] or reader[0][0] != "requirement_id":
            raise FormatViolation("matrix CSV must start with a 'requirement_id' header")
        cols = reader[0][1:]
        rows: list[str] = []
        cells: dict[tuple[str, str], str] = {}
        for line in reader[1:]:
            if len(line) != len(cols) + 1:
                raise FormatViolation(f"matrix row has {len(line)} fields, expected {len(cols) + 1}")
            rows.append(line[0])
            for c, v in zip(cols, line[1:]):
                if v not in ("", "X"):
                    raise FormatViolation(f"matrix cell must be 'X' or empty, got {v!r}")
                if v:
                    cells[(line[0], c)] = v
        return cls(rows, cols, cells)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TraceMatrix):
            return NotImplemented
        return self.rows == other.rows and self.cols == other.cols and self.cells == other.cells


def matrix(store: TraceabilityStore, graph: KnowledgeGraph) -> TraceMatrix:
    rows = [n.id for n in graph.nodes(NodeType.Requirement)]
    cols = [n.id for n in graph.nodes(NodeType.TestCase)]
    cells = {}
    for t in store.links(LinkType.ReqToCase):
        if t.src in graph and t.dst in graph:
            cells[(t.src, t.dst)] = "X"
    return TraceMatrix(rows, cols, cells)


def coverage(
    store: TraceabilityStore, graph: KnowledgeGraph, requirements: Iterable[str] | None = None
) -> float:
    """Fraction of requirements with at least one ReqToCase link."""
    reqs = sorted(set(requirements)) if requirements is not None else [n.id for n in graph.nodes(NodeType.Requirement)]
    if not reqs:
        raise NoRequirements("no requirement nodes to measure coverage over")
    covered = sum(1 for r in reqs if store.forward(r, LinkType.ReqToCase))
    return covered / len(reqs)


# ---------------------------------------------------------------------------
# Change impact
# ---------------------------------------------------------------------------

_FORWARD_TYPES = frozenset({EdgeType.Impacts})
_REVERSE_TYPES = frozenset({EdgeType.DependsOn, EdgeType.Requires})


@dataclass(frozen=True)
class AffectedNode:
    node_id: str
    node_type: NodeType
    path: tuple[str, ...]
    impact_score: float

    @property
    def hops(self) -> int:
        return len(self.path) - 1

    def to_dict(self) -> dict[str, Any]:
        return {
            "node_id": self.node_id,
            "node_type": self.node_type.value,
            "path": list(self.path),
            "impact_score": self.impact_score,
        }


@dataclass
class ImpactReport:
    changed: str
    affected: list[AffectedNode]

    def ids(self) -> list[str]:
        return [a.node_id for a in self.affected]

    def to_dict(self) -> dict[str, Any]:
        return {"changed": self.changed, "affected": [a.to_dict() for a in self.affected]}


def _impact_steps(graph: KnowledgeGraph, u: str) -> list[tuple[str, float]]:
    steps = [(e.dst, e.weight) for e in graph.out_edges(u) if e.type in _FORWARD_TYPES]
    steps += [(e.src, e.weight) for e in graph.in_edges(u) if e.type in _REVERSE_TYPES]
    return steps


def _better(a: tuple[float, tuple[str, ...]], b: tuple[float, tuple[str, ...]] | None) -> bool:
    return b is None or (-a[0], a[1]) < (-b[0], b[1])


def impact(
    changed: str,
    graph: KnowledgeGraph,
    store: TraceabilityStore | None = None,
    max_depth: int = IMPACT_DEPTH,
    decay: float = IMPACT_DECAY,
) -> ImpactReport:
    """Nodes affected by modifying ``changed``.

    Change propagates forward along Impacts edges and backwards along
    DependsOn/Requires edges (whoever depends on or requires the changed node),
    for at most ``max_depth`` hops. Each path scores prod(weights) * decay**hops
    and every node keeps its best path. Affected requirements are then extended
    through ReqToCase links to their test cases at no extra hop cost.
    """
    graph.node(changed)
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    best: dict[str, tuple[float, tuple[str, ...]]] = {changed: (1.0, (changed,))}
    layer = {changed: (1.0, (changed,))}
    for _ in range(max_depth):
        nxt: dict[str, tuple[float, tuple[str, ...]]] = {}
        for u in sorted(layer):
            score, path = layer[u]
            for v, w in _impact_steps(graph, u):
                cand = (score * w * decay, path + (v,))
                if _better(cand, nxt.get(v)):
                    nxt[v] = cand
        for v, cand in nxt.items():
            if v != changed and _better(cand, best.get(v)):
                best[v] = cand
        layer = nxt
        if not layer:
            break

    if store is not None:
        for node_id, (score, path) in sorted(best.items()):
            if graph.node(node_id).type is not NodeType.Requirement:
                continue
            for t in store.forward(node_id, LinkType.ReqToCase):
                if t.dst == changed or t.dst not in graph:
                    continue
                cand = (score, path + (t.dst,))
                if _better(cand, best.get(t.dst)):
                    best[t.dst] = cand

    affected = [
        AffectedNode(n, graph.node(n).type, path, score) for n, (score, path) in best.items() if n != changed
    ]
    affected.sort(key=lambda a: (-a.impact_score, a.node_id))
    return ImpactReport(changed, affected)


def links_for_nodes(store: TraceabilityStore, nodes: Sequence[str]) -> list[TraceLink]:
    out: dict[str, TraceLink] = {}
    for n in nodes:
        for t in store.forward(n) + store.reverse(n):
            out[t.id] = t
    return sorted(out.values(), key=lambda t: (t.created_at, t.id))
