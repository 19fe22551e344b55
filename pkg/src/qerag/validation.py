"""Seven-layer validation of generated artifacts and assembled context bundles.

Layers always run in the same order and each one reads the subject
defensively, so a defect is reported by the layer that owns it and does not
spill into the others.
"""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .corpus import Corpus, redact
from .errors import IoFailure, UnparsableArtifact
from .graph import KnowledgeGraph, NodeType
from .orchestration.agents import regulations_of
from .orchestration.models import TestCase, TestPlan
from .retrieval.conflicts import find_conflicts, normalize_value
from .retrieval.types import ContextBundle, OriginKind
from .traceability import LinkType, TraceabilityStore

NOT_APPLICABLE = "not applicable"
REQUIRES_RE = re.compile(r"\(requires P(\d+)\)")
EXPECT_RE = re.compile(r"^\s*([\w\-]+\.[\w\-]+)\s*=\s*(.+?)\s*$")
_LOGIC_TYPES = frozenset({NodeType.BusinessProcess, NodeType.Component, NodeType.Configuration})


class ValidationLayer(str, enum.Enum):
    Syntax = "Syntax"
    Semantic = "Semantic"
    BusinessLogic = "BusinessLogic"
    Traceability = "Traceability"
    Compliance = "Compliance"
    Performance = "Performance"
    Integration = "Integration"


LAYERS = tuple(ValidationLayer)


@dataclass(frozen=True)
class ValidationBudget:
    perf_budget_ms: float = 5000.0
    max_bytes: int = 65536
    performance_mandatory: bool = False


@dataclass
class LayerResult:
    layer: ValidationLayer
    passed: bool
    mandatory: bool = True
    findings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "layer": self.layer.value,
            "passed": self.passed,
            "mandatory": self.mandatory,
            "findings": list(self.findings),
        }


@dataclass
class ValidationReport:
    subject: str
    subject_kind: str
    layers: list[LayerResult]

    @property
    def overall(self) -> bool:
        return all(r.passed for r in self.layers if r.mandatory)

    def layer(self, layer: ValidationLayer | str) -> LayerResult:
        layer = ValidationLayer(layer)
        return next(r for r in self.layers if r.layer is layer)

    def failed_layers(self) -> list[ValidationLayer]:
        return [r.layer for r in self.layers if not r.passed]

    def to_dict(self) -> dict[str, Any]:
        return {
            "subject": self.subject,
            "subject_kind": self.subject_kind,
            "overall": self.overall,
            "layers": [r.to_dict() for r in self.layers],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


Check = Callable[[], list[str]]


def _run(subject: str, kind: str, checks: dict[ValidationLayer, Check], budget: ValidationBudget) -> ValidationReport:
    results = []
    for layer in LAYERS:
        findings = checks[layer]()
        passed = not findings or findings == [NOT_APPLICABLE] or all(f.startswith("note:") for f in findings)
        mandatory = budget.performance_mandatory if layer is ValidationLayer.Performance else True
        results.append(LayerResult(layer, passed, mandatory, findings))
    return ValidationReport(subject, kind, results)


# ---------------------------------------------------------------------------
# artifact loading
# ---------------------------------------------------------------------------


def load_artifact(artifact: Any) -> dict[str, Any]:
    """Accept a TestCase/TestPlan, a dict, a JSON string or a path to a JSON file."""
    if isinstance(artifact, (TestCase, TestPlan)):
        return artifact.to_dict()
    if isinstance(artifact, dict):
        return artifact
    if isinstance(artifact, Path) or (isinstance(artifact, str) and not artifact.lstrip().startswith(("{", "["))):
        try:
            artifact = Path(artifact).read_text(encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot read artifact: {exc}") from exc
    if isinstance(artifact, str):
        try:
            data = json.loads(artifact)
        except json.JSONDecodeError as exc:
            raise UnparsableArtifact(f"artifact is not valid JSON: {exc}") from exc
        if isinstance(data, dict):
            return data
    raise UnparsableArtifact("artifact must be a JSON object describing a TestCase or TestPlan")


def artifact_kind(data: dict[str, Any]) -> str:
    if "steps" in data:
        return "TestCase"
    if "objectives" in data:
        return "TestPlan"
    raise UnparsableArtifact("artifact is neither a TestCase (steps) nor a TestPlan (objectives)")


def _strs(value: Any) -> list[str]:
    return [v for v in value if isinstance(v, str)] if isinstance(value, list) else []


def _dicts(value: Any) -> list[dict[str, Any]]:
    return [v for v in value if isinstance(v, dict)] if isinstance(value, list) else []


def _is_str_list(value: Any) -> bool:
    return isinstance(value, list) and all(isinstance(v, str) for v in value)


def _nonempty_str(value: Any) -> bool:
    return isinstance(value, str) and bool(value.strip())


# ---------------------------------------------------------------------------
# test cases
# ---------------------------------------------------------------------------


def _case_syntax(d: dict[str, Any]) -> list[str]:
    out = []
    for name in ("id", "title"):
        if not _nonempty_str(d.get(name)):
            out.append(f"field `{name}` must be a non-empty string")
    if not _is_str_list(d.get("preconditions")):
        out.append("field `preconditions` must be a list of strings")
    prio = d.get("priority")
    if not isinstance(prio, int) or isinstance(prio, bool) or not 1 <= prio <= 4:
        out.append("field `priority` must be an integer in 1..4")
    if not _is_str_list(d.get("requirement_refs")):
        out.append("field `requirement_refs` must be a list of strings")
    for name in ("integration_refs", "compliance_tags", "source_refs"):
        if name in d and not _is_str_list(d[name]):
            out.append(f"field `{name}` must be a list of strings")
    steps = d.get("steps")
    if not isinstance(steps, list) or not steps:
        out.append("field `steps` must be a non-empty list")
    else:
        for pos, s in enumerate(steps, start=1):
            if not isinstance(s, dict):
                out.append(f"field `steps[{pos}]` must be an object")
                continue
            if not isinstance(s.get("index"), int) or isinstance(s.get("index"), bool):
                out.append(f"field `steps[{pos}].index` must be an integer")
            for name in ("action", "expected"):
                if not _nonempty_str(s.get(name)):
                    out.append(f"field `steps[{pos}].{name}` must be a non-empty string")
            if s.get("ref") is not None and not isinstance(s.get("ref"), str):
                out.append(f"field `steps[{pos}].ref` must be a string or null")
    return out


def _case_semantic(d: dict[str, Any]) -> list[str]:
    out = []
    steps = _dicts(d.get("steps"))
    indices = [s.get("index") for s in steps if isinstance(s.get("index"), int)]
    dupes = sorted({i for i in indices if indices.count(i) > 1})
    if dupes:
        out.append(f"duplicate step indices: {dupes}")
    elif indices and indices != list(range(1, len(indices) + 1)):
        out.append(f"step indices must run 1..{len(indices)} in order, got {indices}")
    n_pre = len(_strs(d.get("preconditions")))
    expectations: dict[str, set[str]] = {}
    for s in steps:
        action = s.get("action") if isinstance(s.get("action"), str) else ""
        for m in REQUIRES_RE.finditer(action):
            if not 1 <= int(m.group(1)) <= n_pre:
                out.append(f"step {s.get('index')} requires undefined precondition P{m.group(1)}")
        expected = s.get("expected") if isinstance(s.get("expected"), str) else ""
        m = EXPECT_RE.match(expected)
        if m:
            expectations.setdefault(m.group(1), set()).add(normalize_value(m.group(2)))
    for key in sorted(expectations):
        if len(expectations[key]) > 1:
            out.append(f"contradictory expected values for {key}: {sorted(expectations[key])}")
    return out


def _case_business(d: dict[str, Any], graph: KnowledgeGraph) -> list[str]:
    out = []
    integrations = set(_strs(d.get("integration_refs")))
    for s in _dicts(d.get("steps")):
        ref = s.get("ref")
        if not isinstance(ref, str) or not ref or ref in integrations:
            continue
        if ref not in graph:
            out.append(f"step {s.get('index')} references unknown node {ref}")
        elif graph.node(ref).type not in _LOGIC_TYPES:
            out.append(f"step {s.get('index')} references {ref}, a {graph.node(ref).type.value} node")
    return out


def _case_trace(d: dict[str, Any], graph: KnowledgeGraph, store: TraceabilityStore | None) -> list[str]:
    refs = _strs(d.get("requirement_refs"))
    if not refs:
        return ["case references no requirement"]
    out = []
    case_id = d.get("id") if isinstance(d.get("id"), str) else ""
    for req in refs:
        if req not in graph or graph.node(req).type is not NodeType.Requirement:
            out.append(f"requirement {req} is not a Requirement node")
        elif store is None or not store.has(req, case_id, LinkType.ReqToCase):
            out.append(f"no ReqToCase link {req} -> {case_id}")
    return out


def _case_compliance(d: dict[str, Any], graph: KnowledgeGraph) -> list[str]:
    out = []
    tags = set(_strs(d.get("compliance_tags")))
    for tag in sorted(tags):
        if tag not in graph or graph.node(tag).type is not NodeType.Regulation:
            out.append(f"compliance tag {tag} is not a Regulation node")
    for req in _strs(d.get("requirement_refs")):
        missing = [r for r in regulations_of(graph, req) if r not in tags]
        if missing:
            out.append(f"requirement {req} is regulated by {missing} but the case lacks those tags")
    return out


def _performance(d: dict[str, Any], budget: ValidationBudget, elapsed_ms: float | None) -> list[str]:
    out = []
    size = len(json.dumps(d, sort_keys=True, ensure_ascii=False).encode("utf-8"))
    if size > budget.max_bytes:
        out.append(f"artifact is {size} bytes, over the {budget.max_bytes}-byte budget")
    if elapsed_ms is not None and elapsed_ms > budget.perf_budget_ms:
        out.append(f"generation took {elapsed_ms:.1f} ms, over the {budget.perf_budget_ms:g} ms budget")
    return out


def _interfaces(ids: list[str], graph: KnowledgeGraph) -> list[str]:
    out = []
    for ref in ids:
        if ref not in graph:
            out.append(f"interface {ref} does not exist")
        elif graph.node(ref).type is not NodeType.Interface:
            out.append(f"{ref} is a {graph.node(ref).type.value} node, not an Interface")
    return out


# ---------------------------------------------------------------------------
# test plans
# ---------------------------------------------------------------------------


def _scope_ids(d: dict[str, Any], key: str) -> list[str]:
    scope = d.get("scope") if isinstance(d.get("scope"), dict) else {}
    value = scope.get(key, "")
    return [v.strip() for v in value.split(",") if v.strip()] if isinstance(value, str) else []


def _plan_syntax(d: dict[str, Any]) -> list[str]:
    out = []
    if not _nonempty_str(d.get("id")):
        out.append("field `id` must be a non-empty string")
    for name in ("scope", "strategy"):
        sec = d.get(name)
        if not isinstance(sec, dict) or not all(isinstance(v, str) for v in sec.values()):
            out.append(f"field `{name}` must map section names to strings")
    objectives = d.get("objectives")
    if not isinstance(objectives, list) or not objectives:
        out.append("field `objectives` must be a non-empty list")
    else:
        for pos, o in enumerate(objectives, start=1):
            if not isinstance(o, dict) or not _nonempty_str(o.get("id")) or not _nonempty_str(o.get("text")):
                out.append(f"field `objectives[{pos}]` needs non-empty `id` and `text`")
            elif not _is_str_list(o.get("requirement_refs")):
                out.append(f"field `objectives[{pos}].requirement_refs` must be a list of strings")
    for name in ("cases", "trace_links"):
        if not _is_str_list(d.get(name)):
            out.append(f"field `{name}` must be a list of strings")
    return out


def _plan_semantic(d: dict[str, Any]) -> list[str]:
    out = []
    ids = [o.get("id") for o in _dicts(d.get("objectives"))]
    if len(ids) != len(set(ids)):
        out.append("duplicate objective ids")
    cases = _strs(d.get("cases"))
    if len(cases) != len(set(cases)):
        out.append("duplicate case ids")
    return out


def _plan_business(d: dict[str, Any], graph: KnowledgeGraph) -> list[str]:
    out = []
    for ref in _scope_ids(d, "business_logic"):
        if ref not in graph or graph.node(ref).type not in _LOGIC_TYPES:
            out.append(f"business-logic reference {ref} is not a BusinessProcess/Component/Configuration node")
    return out


def _plan_trace(d: dict[str, Any], graph: KnowledgeGraph, store: TraceabilityStore | None) -> list[str]:
    out = []
    cases = _strs(d.get("cases"))
    for o in _dicts(d.get("objectives")):
        refs = _strs(o.get("requirement_refs"))
        if not refs:
            out.append(f"objective {o.get('id')} traces to no requirement")
        for req in refs:
            if req not in graph or graph.node(req).type is not NodeType.Requirement:
                out.append(f"requirement {req} is not a Requirement node")
            elif cases and not (store is not None and any(store.has(req, c, LinkType.ReqToCase) for c in cases)):
                out.append(f"requirement {req} has no ReqToCase link to a plan case")
    if store is not None:
        for lid in _strs(d.get("trace_links")):
            if lid not in store:
                out.append(f"trace link {lid} is not in the store")
    return out


def _plan_compliance(d: dict[str, Any], graph: KnowledgeGraph) -> list[str]:
    out = []
    cases = [c for c in _strs(d.get("cases")) if c in graph]
    if not cases:
        return []
    tags_by_case = {c: set(filter(None, graph.node(c).attrs.get("compliance_tags", "").split(","))) for c in cases}
    for o in _dicts(d.get("objectives")):
        for req in _strs(o.get("requirement_refs")):
            regs = set(regulations_of(graph, req))
            if regs and not any(regs <= tags for tags in tags_by_case.values()):
                out.append(f"no case carries the tags {sorted(regs)} required by {req}")
    return out


def validate_artifact(
    artifact: Any,
    graph: KnowledgeGraph,
    store: TraceabilityStore | None = None,
    budget: ValidationBudget | None = None,
    elapsed_ms: float | None = None,
) -> ValidationReport:
    budget = budget or ValidationBudget()
    d = load_artifact(artifact)
    kind = artifact_kind(d)
    subject = d.get("id") if isinstance(d.get("id"), str) else "<unnamed>"
    if kind == "TestCase":
        checks = {
            ValidationLayer.Syntax: lambda: _case_syntax(d),
            ValidationLayer.Semantic: lambda: _case_semantic(d),
            ValidationLayer.BusinessLogic: lambda: _case_business(d, graph),
            ValidationLayer.Traceability: lambda: _case_trace(d, graph, store),
            ValidationLayer.Compliance: lambda: _case_compliance(d, graph),
            ValidationLayer.Performance: lambda: _performance(d, budget, elapsed_ms),
            ValidationLayer.Integration: lambda: _interfaces(_strs(d.get("integration_refs")), graph),
        }
    else:
        checks = {
            ValidationLayer.Syntax: lambda: _plan_syntax(d),
            ValidationLayer.Semantic: lambda: _plan_semantic(d),
            ValidationLayer.BusinessLogic: lambda: _plan_business(d, graph),
            ValidationLayer.Traceability: lambda: _plan_trace(d, graph, store),
            ValidationLayer.Compliance: lambda: _plan_compliance(d, graph),
            ValidationLayer.Performance: lambda: _performance(d, budget, elapsed_ms),
            ValidationLayer.Integration: lambda: _interfaces(_scope_ids(d, "integrations"), graph),
        }
    return _run(subject, kind, checks, budget)


# ---------------------------------------------------------------------------
# context bundles
# ---------------------------------------------------------------------------


def _bundle_syntax(b: ContextBundle) -> list[str]:
    out = []
    seen: set[str] = set()
    for item in b.items:
        if not item.chunk_id:
            out.append("item with empty chunk_id")
        if item.chunk_id in seen:
            out.append(f"chunk {item.chunk_id} appears twice")
        seen.add(item.chunk_id)
        if not math.isfinite(item.score) or item.score < 0:
            out.append(f"chunk {item.chunk_id} has invalid score {item.score}")
    scores = [i.score for i in b.items]
    if any(a < c for a, c in zip(scores, scores[1:])):
        out.append("items are not ordered by descending score")
    return out


def _bundle_semantic(b: ContextBundle) -> list[str]:
    escalated = {e.key for e in b.escalations}
    out = []
    for key, cands in find_conflicts(b.items).items():
        if len({normalize_value(c.value) for c in cands}) < 2:
            continue
        if key in escalated and all(c.item.escalated for c in cands):
            continue
        out.append(f"unresolved conflict on {key} between {[c.cid for c in cands]}")
    if out:
        return out
    return [f"note: escalated conflict on {e.key} ({', '.join(e.candidates)})" for e in b.escalations]


def _bundle_trace(b: ContextBundle, corpus: Corpus | None) -> list[str]:
    out = []
    for item in b.items:
        if corpus is not None:
            if item.chunk_id not in corpus:
                out.append(f"chunk {item.chunk_id} is not in the corpus")
                continue
            c = corpus.get(item.chunk_id)
            if (c.source, c.timestamp, c.credibility) != (
                item.provenance.source,
                item.provenance.timestamp,
                item.provenance.credibility,
            ):
                out.append(f"provenance of {item.chunk_id} does not match its corpus chunk")
        elif not item.provenance.source:
            out.append(f"chunk {item.chunk_id} has no provenance source")
        if item.origin.kind is OriginKind.GraphExpansion and not item.origin.path_nodes:
            out.append(f"graph-expanded chunk {item.chunk_id} carries no path")
    return out


def _bundle_compliance(b: ContextBundle) -> list[str]:
    return [f"chunk {i.chunk_id} contains unredacted personal data" for i in b.items if redact(i.text)[1]]


def _bundle_performance(b: ContextBundle) -> list[str]:
    if b.token_budget and b.total_tokens > b.token_budget:
        return [f"bundle holds {b.total_tokens} tokens, over its {b.token_budget}-token budget"]
    return []


def validate_context(
    bundle: ContextBundle, corpus: Corpus | None = None, budget: ValidationBudget | None = None
) -> ValidationReport:
    """Same seven layers, specialised to an assembled context bundle.

    Escalated conflicts pass the Semantic layer but are listed as findings.
    """
    budget = budget or ValidationBudget()

    def na() -> list[str]:
        return [NOT_APPLICABLE]

    checks = {
        ValidationLayer.Syntax: lambda: _bundle_syntax(bundle),
        ValidationLayer.Semantic: lambda: _bundle_semantic(bundle),
        ValidationLayer.BusinessLogic: na,
        ValidationLayer.Traceability: lambda: _bundle_trace(bundle, corpus),
        ValidationLayer.Compliance: lambda: _bundle_compliance(bundle),
        ValidationLayer.Performance: lambda: _bundle_performance(bundle),
        ValidationLayer.Integration: na,
    }
    return _run(f"context:{bundle.query[:40]}", "ContextBundle", checks, budget)
