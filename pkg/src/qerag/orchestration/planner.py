"""Test-plan synthesis and the end-to-end generation pipeline."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from ..errors import EmptyRequirements
from ..graph import EdgeType, KnowledgeGraph, NodeType, neighbors_by_type
from ..retrieval.engine import Indexes, RetrievalParams, retrieve, unassembled_bundle
from ..retrieval.types import ContextBundle, StageMode
from ..traceability import LinkType, TraceabilityStore
from .agents import (
    Router,
    agent_change_mapping,
    agent_compliance,
    agent_integration_points,
    agent_legacy_analysis,
    agent_test_cases,
    case_id_for,
    regulations_of,
)
from .generator import Generator, GeneratorTier, StubGenerator
from .models import BusinessIntent, ComplianceReport, FunctionalChange, Objective, TestCase, TestPlan
from .prompts import CaseTask, PromptProfile
from .router import ROUTER_THRESHOLD

PLANNER_STEPS = (
    "hybrid_retrieval",
    "analyze_testing_scope",
    "extract_objectives",
    "generate_strategy",
    "synthesize_plan",
)
_LEGACY_EDGES = (EdgeType.Covers, EdgeType.Validates)
_LOGIC_TYPES = frozenset({NodeType.BusinessProcess, NodeType.Component, NodeType.Configuration})


@dataclass
class PlannerDeps:
    """Everything the planner and agents need; the ``use_*`` switches exist for ablations."""

    indexes: Indexes
    graph: KnowledgeGraph
    generator: Generator | Mapping[GeneratorTier, Generator] = field(default_factory=StubGenerator)
    store: TraceabilityStore | None = None
    params: RetrievalParams = field(default_factory=RetrievalParams)
    router_threshold: float = ROUTER_THRESHOLD
    profile: PromptProfile = field(default_factory=PromptProfile)
    use_agents: bool = True
    use_graph: bool = True
    use_context_assembly: bool = True
    use_traceability: bool = True


def _join(ids: Sequence[str]) -> str:
    return ", ".join(ids)


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _label(graph: KnowledgeGraph, node_id: str) -> str:
    return graph.node(node_id).label or node_id


def plan_id(requirements: Sequence[str], business: Sequence[str], history: Sequence[str]) -> str:
    key = "\x1f".join(["|".join(sorted(set(x))) for x in (requirements, business, history)])
    return "PLAN-" + hashlib.sha1(key.encode("utf-8")).hexdigest()[:10]


def retrieval_query(requirements: Sequence[str], deps: PlannerDeps) -> str:
    """Requirement labels plus the text of their own chunks."""
    parts = []
    for req in requirements:
        node = deps.graph.node(req)
        if node.label:
            parts.append(node.label)
        parts += [deps.indexes.corpus.get(c).text for c in sorted(node.chunk_refs) if c in deps.indexes.corpus]
    return " ".join(parts)


def hybrid_retrieval(
    requirements: Sequence[str], business: Sequence[str], history: Sequence[str], deps: PlannerDeps
) -> ContextBundle:
    query = retrieval_query(requirements, deps)
    mode = StageMode.HybridRag if deps.use_graph else StageMode.VectorSearch
    seeds = list(dict.fromkeys([*requirements, *business])) if deps.use_graph else []
    fetch = retrieve if deps.use_context_assembly else unassembled_bundle
    return fetch(query, mode, deps.indexes, deps.graph, deps.params, seeds)


def analyze_testing_scope(
    requirements: Sequence[str],
    business: Sequence[str],
    history: Sequence[str],
    context: ContextBundle,
    changes: Sequence[FunctionalChange],
    interfaces: Sequence[str],
) -> dict[str, str]:
    return {
        "requirements": _join(requirements),
        "business_logic": _join(business),
        "history": _join(history),
        "components_old": _join(sorted({c for ch in changes for c in ch.old_components})),
        "components_new": _join(sorted({c for ch in changes for c in ch.new_components})),
        "integrations": _join(interfaces),
        "context_sources": _join(context.chunk_ids()),
    }


def legacy_nodes_for(graph: KnowledgeGraph, requirement: str) -> list[str]:
    """TestCase nodes joined to the requirement by Covers/Validates edges."""
    return [
        n
        for n in neighbors_by_type(graph, requirement, _LEGACY_EDGES, "both")
        if graph.node(n).type is NodeType.TestCase
    ]


def extract_objectives(
    requirements: Sequence[str], graph: KnowledgeGraph, intents: Sequence[BusinessIntent]
) -> list[Objective]:
    out = []
    for i, req in enumerate(requirements, start=1):
        legacy = legacy_nodes_for(graph, req)
        cited = [bi.intent for bi in intents if set(bi.referenced_nodes) & set(legacy)]
        text = f"Confirm that {_label(graph, req)} behaves as required in the target system"
        out.append(Objective(f"OBJ-{i:02d}", text, [req], legacy, list(dict.fromkeys(cited))))
    return out


def generate_strategy(
    objectives: Sequence[Objective], changes: Sequence[FunctionalChange], interfaces: Sequence[str]
) -> dict[str, str]:
    legacy = sorted({r for o in objectives for r in o.legacy_refs})
    unmapped = sorted({u for ch in changes for u in ch.unmapped})
    return {
        "approach": f"{len(objectives)} objective(s), one generated case per objective",
        "regression": f"replay legacy scenarios {_join(legacy)}" if legacy else "",
        "migration": f"unmapped legacy components need manual review: {_join(unmapped)}" if unmapped else "",
        "integration": f"end-to-end checks for {_join(interfaces)}" if interfaces else "",
    }


def generate_test_plan(
    requirements: Sequence[str],
    business: Sequence[str],
    history: Sequence[str],
    deps: PlannerDeps,
    trace: list[str] | None = None,
) -> TestPlan:
    """Plan from requirements, business-logic nodes and historical chunks.

    ``trace`` (if given) receives the name of every planner step as it runs.
    Trace links are registered later by :func:`generate_cases`, once the
    TestCase endpoints exist.
    """
    return _plan_and_context(requirements, business, history, deps, trace)[0]


def _plan_and_context(
    requirements: Sequence[str],
    business: Sequence[str],
    history: Sequence[str],
    deps: PlannerDeps,
    trace: list[str] | None,
) -> tuple[TestPlan, ContextBundle]:
    if not requirements:
        raise EmptyRequirements("at least one requirement is needed")
    requirements = list(dict.fromkeys(requirements))
    business = list(dict.fromkeys(business))
    history = list(dict.fromkeys(history))
    for n in [*requirements, *business]:
        deps.graph.node(n)
    log = trace if trace is not None else []

    log.append("hybrid_retrieval")
    context = hybrid_retrieval(requirements, business, history, deps)

    log.append("analyze_testing_scope")
    if deps.use_agents:
        intents = agent_legacy_analysis(history, deps.indexes.corpus, deps.graph) if history else []
        changes = agent_change_mapping(requirements, deps.graph)
        interfaces = agent_integration_points([*requirements, *business], deps.graph)
    else:
        intents, changes, interfaces = [], [], []
    scope = analyze_testing_scope(requirements, business, history, context, changes, interfaces)

    log.append("extract_objectives")
    objectives = extract_objectives(requirements, deps.graph, intents)

    log.append("generate_strategy")
    strategy = generate_strategy(objectives, changes, interfaces)

    log.append("synthesize_plan")
    return TestPlan(plan_id(requirements, business, history), scope, objectives, strategy), context


def case_task(
    objective: Objective, plan: TestPlan, context: ContextBundle, deps: PlannerDeps
) -> CaseTask:
    g = deps.graph
    req = objective.requirement_refs[0]
    if not deps.use_agents:
        return CaseTask(
            case_id=case_id_for(req),
            requirement_id=req,
            requirement_label=_label(g, req),
            objective=objective.text,
            context_size=len(context.items),
        )
    near = g.successors(req, "both")
    processes = [n for n in near if g.node(n).type is NodeType.BusinessProcess]
    if not processes:
        processes = [b for b in _split(plan.scope.get("business_logic", "")) if g.node(b).type is NodeType.BusinessProcess]
    validates = sorted(
        {
            _label(g, e.dst)
            for n in [req, *processes]
            for e in g.out_edges(n)
            if e.type is EdgeType.Validates and e.dst != req
        }
    )
    interfaces = agent_integration_points([req, *processes], g)
    return CaseTask(
        case_id=case_id_for(req),
        requirement_id=req,
        requirement_label=_label(g, req),
        objective=objective.text,
        processes=tuple((p, _label(g, p)) for p in processes),
        validates=tuple(validates),
        interfaces=tuple((i, _label(g, i)) for i in interfaces),
        regulations=tuple(regulations_of(g, req)),
        intents=tuple(objective.legacy_intents),
        context_size=len(context.items),
    )


def register_case(case: TestCase, graph: KnowledgeGraph, store: TraceabilityStore) -> list[str]:
    """Add the case node and its ReqToCase/LogicToScenario links; returns link ids."""
    graph.add_node(
        case.id,
        NodeType.TestCase,
        label=case.title,
        attrs={"priority": str(case.priority), "compliance_tags": ",".join(case.compliance_tags)},
    )
    ids = []
    for req in case.requirement_refs:
        if req in graph and graph.node(req).type is NodeType.Requirement:
            ids.append(store.link(req, case.id, LinkType.ReqToCase).id)
    for ref in dict.fromkeys(s.ref for s in case.steps if s.ref):
        if ref in graph and graph.node(ref).type in _LOGIC_TYPES:
            ids.append(store.link(ref, case.id, LinkType.LogicToScenario).id)
    return ids


def generate_cases(
    plan: TestPlan, deps: PlannerDeps, context: ContextBundle | None = None
) -> tuple[list[TestCase], ComplianceReport]:
    """Run the case and compliance agents for a plan and register trace links.

    ``plan.cases`` and ``plan.trace_links`` are filled in place.
    """
    requirements = _split(plan.scope.get("requirements", "")) or plan.requirement_ids()
    if context is None:
        business = _split(plan.scope.get("business_logic", ""))
        history = _split(plan.scope.get("history", ""))
        context = hybrid_retrieval(requirements, business, history, deps)
    tasks = [case_task(o, plan, context, deps) for o in plan.objectives]
    router = Router(deps.graph, deps.router_threshold)
    cases = agent_test_cases(plan, context, deps.generator, router, tasks, deps.profile, deps.params.workers)
    report = ComplianceReport()
    if deps.use_agents:
        cases, report = agent_compliance(cases, deps.graph, requirements)
    plan.cases = [c.id for c in cases]
    if deps.use_traceability:
        if deps.store is None:
            deps.store = TraceabilityStore(deps.graph)
        links: list[str] = []
        for case in cases:
            links += [lid for lid in register_case(case, deps.graph, deps.store) if lid not in links]
        plan.trace_links = links
    return cases, report


@dataclass
class PipelineResult:
    plan: TestPlan
    cases: list[TestCase]
    compliance: ComplianceReport
    context: ContextBundle
    trace: list[str]

    def to_dict(self) -> dict[str, Any]:
        return {
            "plan": self.plan.to_dict(),
            "cases": [c.to_dict() for c in self.cases],
            "compliance": self.compliance.to_dict(),
            "context": self.context.to_dict(),
            "trace": list(self.trace),
        }


def run_pipeline(
    requirements: Sequence[str], business: Sequence[str], history: Sequence[str], deps: PlannerDeps
) -> PipelineResult:
    trace: list[str] = []
    plan, context = _plan_and_context(requirements, business, history, deps, trace)
    cases, report = generate_cases(plan, deps, context)
    return PipelineResult(plan, cases, report, context, trace)
