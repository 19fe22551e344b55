from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Any

from ..corpus import DocumentChunk, SourceKind


class StageMode(str, enum.Enum):
    BasicRag = "basic"
    VectorSearch = "vector"
    HybridRag = "hybrid"
    Agentic = "agentic"

    @classmethod
    def parse(cls, value: "str | StageMode") -> "StageMode":
        if isinstance(value, cls):
            return value
        lowered = str(value).lower()
        for m in cls:
            if lowered in (m.value, m.name.lower()):
                return m
        raise ValueError(f"unknown retrieval mode: {value!r}")


class OriginKind(str, enum.Enum):
    VectorHit = "VectorHit"
    GraphExpansion = "GraphExpansion"
    Keyword = "Keyword"


@dataclass(frozen=True)
class Origin:
    kind: OriginKind
    seed_chunk: str | None = None
    path_types: tuple[str, ...] = ()
    path_nodes: tuple[str, ...] = ()
    hops: int = 0

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind.value}
        if self.kind is OriginKind.GraphExpansion:
            d.update(
                seed_chunk=self.seed_chunk,
                path_types=list(self.path_types),
                path_nodes=list(self.path_nodes),
                hops=self.hops,
            )
        return d


VECTOR_HIT = Origin(OriginKind.VectorHit)
KEYWORD = Origin(OriginKind.Keyword)


@dataclass(frozen=True)
class Provenance:
    source: str
    timestamp: int
    credibility: float

    def to_dict(self) -> dict[str, Any]:
        return {"source": self.source, "timestamp": self.timestamp, "credibility": self.credibility}


@dataclass(frozen=True)
class ContextItem:
    chunk_id: str
    score: float
    origin: Origin
    provenance: Provenance
    title: str = ""
    text: str = ""
    kind: SourceKind = SourceKind.SapDoc
    redaction_count: int = 0
    escalated: bool = False

    @classmethod
    def from_chunk(cls, chunk: DocumentChunk, score: float, origin: Origin) -> "ContextItem":
        return cls(
            chunk_id=chunk.id,
            score=score,
            origin=origin,
            provenance=Provenance(chunk.source, chunk.timestamp, chunk.credibility),
            title=chunk.title,
            text=chunk.text,
            kind=chunk.kind,
            redaction_count=chunk.redaction_count,
        )

    @property
    def n_tokens(self) -> int:
        return len(self.text.split())

    def flagged(self) -> "ContextItem":
        return replace(self, escalated=True)

    def to_dict(self) -> dict[str, Any]:
        return {
            "chunk_id": self.chunk_id,
            "score": self.score,
            "origin": self.origin.to_dict(),
            "provenance": self.provenance.to_dict(),
            "title": self.title,
            "kind": self.kind.value,
            "tokens": self.n_tokens,
            "escalated": self.escalated,
        }


@dataclass(frozen=True)
class ConflictRecord:
    key: str
    candidates: tuple[str, ...]
    winner: str
    strategy_index: int
    strategy: str
    rationale: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "key": self.key,
            "candidates": list(self.candidates),
            "winner": self.winner,
            "strategy_index": self.strategy_index,
            "strategy": self.strategy,
            "rationale": self.rationale,
        }


@dataclass(frozen=True)
class EscalationRecord:
    key: str
    candidates: tuple[str, ...]
    reason: str

    def to_dict(self) -> dict[str, Any]:
        return {"key": self.key, "candidates": list(self.candidates), "reason": self.reason}


@dataclass
class ContextBundle:
    query: str
    mode: StageMode
    items: list[ContextItem] = field(default_factory=list)
    conflicts_resolved: list[ConflictRecord] = field(default_factory=list)
    escalations: list[EscalationRecord] = field(default_factory=list)
    token_budget: int = 0

    @property
    def total_tokens(self) -> int:
        return sum(i.n_tokens for i in self.items)

    def chunk_ids(self) -> list[str]:
        return [i.chunk_id for i in self.items]

    def to_dict(self) -> dict[str, Any]:
        return {
            "query": self.query,
            "mode": self.mode.value,
            "token_budget": self.token_budget,
            "total_tokens": self.total_tokens,
            "items": [i.to_dict() for i in self.items],
            "conflicts_resolved": [c.to_dict() for c in self.conflicts_resolved],
            "escalations": [e.to_dict() for e in self.escalations],
        }
