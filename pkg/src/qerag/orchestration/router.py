"""Complexity-based choice between the light and heavy generator tiers."""

from __future__ import annotations

from ..graph import Direction, KnowledgeGraph, bfs
from .generator import GeneratorTier
from .prompts import CaseTask

ROUTER_THRESHOLD = 5.0
DEPENDENCY_DEPTH = 2


def complexity_score(task: CaseTask, graph: KnowledgeGraph | None) -> float:
    """Distinct nodes within two hops of the target (either direction) plus context items / 10."""
    deps = 0
    if graph is not None and task.requirement_id in graph:
        reached = bfs(graph, task.requirement_id, DEPENDENCY_DEPTH, Direction.BOTH)
        deps = sum(1 for node_id, _ in reached if node_id != task.requirement_id)
    return deps + task.context_size / 10.0


def route_complexity(
    task: CaseTask, graph: KnowledgeGraph | None, threshold: float = ROUTER_THRESHOLD
) -> GeneratorTier:
    return GeneratorTier.Heavy if complexity_score(task, graph) >= threshold else GeneratorTier.Light
