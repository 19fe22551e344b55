"""Small builders shared by several test modules."""

from __future__ import annotations

from qerag.corpus import SourceKind
from qerag.retrieval import ContextItem, Origin, OriginKind, Provenance


def item(
    cid: str,
    text: str,
    *,
    score: float = 0.5,
    credibility: float = 0.7,
    timestamp: int = 1_700_000_000,
    kind: SourceKind = SourceKind.SapDoc,
    source: str | None = None,
    title: str = "",
    hops: int = 0,
    redactions: int = 0,
) -> ContextItem:
    origin = Origin(OriginKind.GraphExpansion, "seed#0", ("DependsOn",) * hops, (), hops) if hops else Origin(
        OriginKind.VectorHit
    )
    return ContextItem(
        chunk_id=cid,
        score=score,
        origin=origin,
        provenance=Provenance(source if source is not None else f"src/{cid}", timestamp, credibility),
        title=title,
        text=text,
        kind=kind,
        redaction_count=redactions,
    )
