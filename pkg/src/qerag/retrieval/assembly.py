"""Budgeted, conflict-resolved merge of retrieved items into a context bundle."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

from ..graph import KnowledgeGraph
from .conflicts import ConflictParams, resolve_conflicts
from .types import ContextBundle, ContextItem, StageMode

MAX_WORKERS = 8


def _item_order(item: ContextItem) -> tuple:
    return (-item.score, item.chunk_id)


def _prepare(item: ContextItem) -> tuple[ContextItem, int]:
    return item, item.n_tokens


def assemble_context(
    items: Sequence[ContextItem],
    token_budget: int,
    workers: int = 1,
    *,
    query: str = "",
    mode: StageMode = StageMode.HybridRag,
    graph: KnowledgeGraph | None = None,
    conflict_params: ConflictParams | None = None,
) -> ContextBundle:
    """Deduplicate, resolve conflicts, rank, and cut to ``token_budget`` tokens.

    Per-item preparation fans out over ``workers`` threads, but results are
    merged in input order and then sorted, so the bundle is identical for
    every worker count. The budget is applied to the ranked list as a prefix
    of whole chunks: the first chunk that does not fit ends the bundle.
    """
    if not 1 <= workers <= MAX_WORKERS:
        raise ValueError(f"workers must be in [1, {MAX_WORKERS}]")
    if workers == 1 or len(items) < 2:
        prepared = [_prepare(i) for i in items]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            prepared = list(pool.map(_prepare, items))

    best: dict[str, ContextItem] = {}
    sizes: dict[str, int] = {}
    for item, size in prepared:
        current = best.get(item.chunk_id)
        if current is None or item.score > current.score:
            best[item.chunk_id] = item
            sizes[item.chunk_id] = size
    unique = sorted(best.values(), key=_item_order)

    kept, conflicts, escalations = resolve_conflicts(unique, graph, conflict_params)
    kept.sort(key=_item_order)

    selected: list[ContextItem] = []
    used = 0
    for item in kept:
        size = sizes[item.chunk_id]
        if used + size > token_budget:
            break
        selected.append(item)
        used += size

    return ContextBundle(
        query=query,
        mode=mode,
        items=selected,
        conflicts_resolved=conflicts,
        escalations=escalations,
        token_budget=token_budget,
    )
