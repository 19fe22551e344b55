"""The five specialist agents: legacy analysis, change mapping, integration
points, test-case generation and compliance."""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

from ..corpus import Corpus
from ..errors import EmptyHistory, GeneratorFailure, UnknownChunk
from ..graph import EdgeType, KnowledgeGraph, NodeType, map_old_to_new, neighbors_by_type
from ..retrieval.types import ContextBundle
from .generator import Generator, GeneratorTier, parse_case_output
from .models import BusinessIntent, ComplianceReport, FunctionalChange, TestCase, TestPlan
from .prompts import CaseTask, PromptProfile, build_prompt
from .router import ROUTER_THRESHOLD, route_complexity

PURPOSE_RE = re.compile(r"PURPOSE:\s*(.+?[.!?])(?=\s|$)", re.S)
SENTENCE_RE = re.compile(r"\s*(.+?[.!?])(?=\s|$)", re.S)

_MAPPING_EDGES = (EdgeType.Requires, EdgeType.ImplementedBy)
_INTEGRATION_EDGES = frozenset({EdgeType.InterfacesWith, EdgeType.DependsOn})


def intent_of(text: str) -> str:
    """The sentence after ``PURPOSE:``, else the first sentence, else the whole text."""
    m = PURPOSE_RE.search(text)
    if m:
        return " ".join(m.group(1).split())
    m = SENTENCE_RE.match(text)
    return " ".join((m.group(1) if m else text).split())


def agent_legacy_analysis(
    history: Sequence[str], corpus: Corpus, graph: KnowledgeGraph | None = None
) -> list[BusinessIntent]:
    if not history:
        raise EmptyHistory("historical corpus is empty")
    out = []
    for cid in dict.fromkeys(history):
        if cid not in corpus:
            raise UnknownChunk(cid)
        refs = tuple(graph.nodes_for_chunk(cid)) if graph is not None else ()
        out.append(BusinessIntent(cid, intent_of(corpus.get(cid).text), refs))
    return out


def agent_change_mapping(requirements: Sequence[str], graph: KnowledgeGraph) -> list[FunctionalChange]:
    out = []
    for req in requirements:
        old = [
            n
            for n in neighbors_by_type(graph, req, _MAPPING_EDGES)
            if graph.node(n).type is NodeType.Component
        ]
        new: list[str] = []
        unmapped: list[str] = []
        for comp in old:
            targets = map_old_to_new(graph, comp)
            if not targets:
                unmapped.append(comp)
            new.extend(t for t in targets if t not in new)
        out.append(FunctionalChange(req, tuple(old), tuple(new), tuple(unmapped)))
    return out


def agent_integration_points(business: Sequence[str], graph: KnowledgeGraph, depth: int = 2) -> list[str]:
    """Interface nodes within ``depth`` hops over InterfacesWith/DependsOn edges, either direction."""
    found: set[str] = set()
    for start in dict.fromkeys(business):
        graph.node(start)
        seen = {start}
        frontier = [start]
        for _ in range(depth):
            nxt = []
            for u in frontier:
                steps = [e.dst for e in graph.out_edges(u) if e.type in _INTEGRATION_EDGES]
                steps += [e.src for e in graph.in_edges(u) if e.type in _INTEGRATION_EDGES]
                for v in steps:
                    if v not in seen:
                        seen.add(v)
                        nxt.append(v)
            frontier = nxt
        found.update(n for n in seen if n != start and graph.node(n).type is NodeType.Interface)
    return sorted(found)


@dataclass(frozen=True)
class Router:
    graph: KnowledgeGraph | None
    threshold: float = ROUTER_THRESHOLD

    def __call__(self, task: CaseTask) -> GeneratorTier:
        return route_complexity(task, self.graph, self.threshold)


def case_id_for(requirement_id: str, n: int = 1) -> str:
    return f"TC-{requirement_id}-{n:02d}"


def default_task(plan: TestPlan, index: int, context: ContextBundle) -> CaseTask:
    obj = plan.objectives[index]
    req = obj.requirement_refs[0]
    return CaseTask(
        case_id=case_id_for(req),
        requirement_id=req,
        requirement_label=req,
        objective=obj.text,
        intents=tuple(obj.legacy_intents),
        context_size=len(context.items),
    )


def _generate_one(
    task: CaseTask,
    context: ContextBundle,
    gen: Generator | Mapping[GeneratorTier, Generator],
    router: Callable[[CaseTask], GeneratorTier],
    profile: PromptProfile,
    requirement_refs: Sequence[str],
) -> TestCase:
    tier = router(task)
    task = replace(task, tier=tier.value)
    generator = gen[tier] if isinstance(gen, Mapping) else gen
    prompt = build_prompt(task, context, profile)
    raw = ""
    for _attempt in range(2):
        raw = generator.generate(prompt)
        try:
            case = parse_case_output(raw)
        except ValueError:
            continue
        case.id = task.case_id
        case.requirement_refs = list(dict.fromkeys([*case.requirement_refs, *requirement_refs]))
        return case
    raise GeneratorFailure(f"generator {generator.name!r} produced malformed output twice for {task.case_id}", raw)


def agent_test_cases(
    plan: TestPlan,
    context: ContextBundle,
    gen: Generator | Mapping[GeneratorTier, Generator],
    router: Callable[[CaseTask], GeneratorTier],
    tasks: Sequence[CaseTask] | None = None,
    profile: PromptProfile | None = None,
    workers: int = 1,
) -> list[TestCase]:
    """One case per objective, generated concurrently and returned in objective order.

    Malformed generator output is retried once before raising GeneratorFailure.
    """
    if not plan.objectives:
        raise ValueError("plan has no objectives")
    profile = profile or PromptProfile()
    if tasks is None:
        tasks = [default_task(plan, i, context) for i in range(len(plan.objectives))]
    if len(tasks) != len(plan.objectives):
        raise ValueError("one task per objective is required")
    jobs = list(zip(tasks, (o.requirement_refs for o in plan.objectives)))

    def run(job: tuple[CaseTask, list[str]]) -> TestCase:
        return _generate_one(job[0], context, gen, router, profile, job[1])

    if workers <= 1 or len(jobs) == 1:
        return [run(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, jobs))


def regulations_of(graph: KnowledgeGraph, node_id: str) -> list[str]:
    if node_id not in graph:
        return []
    return [n for n in graph.successors(node_id, "both") if graph.node(n).type is NodeType.Regulation]


def _touched(case: TestCase) -> list[str]:
    nodes = list(case.requirement_refs) + list(case.integration_refs)
    nodes += [s.ref for s in case.steps if s.ref]
    return list(dict.fromkeys(nodes))


def agent_compliance(
    cases: Sequence[TestCase], graph: KnowledgeGraph, requirements: Sequence[str] | None = None
) -> tuple[list[TestCase], ComplianceReport]:
    """Tag cases with the Regulation nodes adjacent to anything they touch."""
    report = ComplianceReport()
    out = []
    for case in cases:
        tags = sorted({r for n in _touched(case) for r in regulations_of(graph, n)})
        added = [t for t in tags if t not in case.compliance_tags]
        if added:
            report.tags_added[case.id] = added
        out.append(replace(case, compliance_tags=sorted(set(case.compliance_tags) | set(tags))))

    reqs = list(requirements) if requirements is not None else sorted({r for c in cases for r in c.requirement_refs})
    for req in reqs:
        regs = regulations_of(graph, req)
        if not regs:
            continue
        report.regulated_requirements.append(req)
        covered = any(req in c.requirement_refs and set(regs) <= set(c.compliance_tags) for c in out)
        if not covered:
            report.untagged_requirements.append(req)
    return out, report
