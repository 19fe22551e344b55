"""Retrieval stages, context assembly and conflict resolution."""

from .assembly import assemble_context
from .conflicts import STRATEGIES, ConflictParams, extract_facts, find_conflicts, resolve_conflicts
from .engine import (
    Indexes,
    RetrievalParams,
    candidate_items,
    hybrid_score,
    keyword_score,
    retrieve,
    unassembled_bundle,
)
from .types import (
    ConflictRecord,
    ContextBundle,
    ContextItem,
    EscalationRecord,
    Origin,
    OriginKind,
    Provenance,
    StageMode,
)

__all__ = [
    "STRATEGIES",
    "ConflictParams",
    "ConflictRecord",
    "ContextBundle",
    "ContextItem",
    "EscalationRecord",
    "Indexes",
    "Origin",
    "OriginKind",
    "Provenance",
    "RetrievalParams",
    "StageMode",
    "assemble_context",
    "candidate_items",
    "extract_facts",
    "find_conflicts",
    "hybrid_score",
    "keyword_score",
    "resolve_conflicts",
    "retrieve",
    "unassembled_bundle",
]
