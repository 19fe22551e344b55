"""Stage-progression and ablation harnesses over a synthetic benchmark.

Metrics are proxies: precision/recall/F1 at k over labelled relevant chunks,
and an agentic success rate (generated case passes validation and cites a
relevant chunk). The published reference figures are carried for display
only and never compared against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Sequence

from ..orchestration.planner import PlannerDeps, PipelineResult, run_pipeline
from ..retrieval.engine import RetrievalParams, retrieve
from ..retrieval.types import StageMode
from ..traceability import TraceabilityStore
from ..validation import ValidationBudget, validate_artifact
from .benchmark import BenchmarkQuery, SyntheticBenchmark

REFERENCE_STAGE_ACCURACY = {
    StageMode.BasicRag: 65.2,
    StageMode.VectorSearch: 78.4,
    StageMode.HybridRag: 87.1,
    StageMode.Agentic: 94.8,
}
REFERENCE_ABLATION_DROP = {
    "no_agents": 12.3,
    "no_graph": 15.7,
    "no_context_assembly": 18.2,
    "no_traceability": 8.9,
}
ABLATIONS = ("full", "no_agents", "no_graph", "no_context_assembly", "no_traceability")
METRIC_NOTE = "proxy metrics on a synthetic benchmark; reference figures are display-only"


@dataclass(frozen=True)
class StageMetrics:
    precision: float
    recall: float
    f1: float
    success_rate: float | None = None

    def to_dict(self) -> dict[str, Any]:
        d = {"precision": self.precision, "recall": self.recall, "f1": self.f1}
        if self.success_rate is not None:
            d["success_rate"] = self.success_rate
        return d


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def score_ranking(ranked: Sequence[str], relevant: Sequence[str], k: int) -> tuple[float, float]:
    """(precision@k, recall@k) for one query."""
    hits = len(set(ranked[:k]) & set(relevant))
    return hits / k, hits / len(relevant)


def _aggregate(pairs: Sequence[tuple[float, float]], success: float | None = None) -> StageMetrics:
    n = len(pairs)
    p = sum(x for x, _ in pairs) / n
    r = sum(y for _, y in pairs) / n
    return StageMetrics(p, r, _f1(p, r), success)


@dataclass
class StageReport:
    seed: int
    k: int
    stages: dict[StageMode, StageMetrics]
    graph_subset: dict[StageMode, StageMetrics]
    reference: dict[StageMode, float] = field(default_factory=lambda: dict(REFERENCE_STAGE_ACCURACY))

    def recall(self, mode: StageMode | str, graph_only: bool = False) -> float:
        table = self.graph_subset if graph_only else self.stages
        return table[StageMode.parse(mode)].recall

    def to_dict(self) -> dict[str, Any]:
        return {
            "report": "stages",
            "note": METRIC_NOTE,
            "seed": self.seed,
            "k": self.k,
            "stages": {m.name: self.stages[m].to_dict() for m in StageMode},
            "requires_graph_subset": {m.name: v.to_dict() for m, v in self.graph_subset.items()},
            "reference_accuracy_pct": {m.name: v for m, v in self.reference.items()},
        }

    def table(self) -> str:
        rows = [("stage", "P@k", "R@k", "F1", "success", "reference %")]
        for m in StageMode:
            s = self.stages[m]
            succ = "-" if s.success_rate is None else f"{s.success_rate:.3f}"
            rows.append((m.name, f"{s.precision:.3f}", f"{s.recall:.3f}", f"{s.f1:.3f}", succ, f"{self.reference[m]:.1f}"))
        return _format_rows(rows) + f"\n({METRIC_NOTE}; k={self.k}, seed={self.seed})\n"


@dataclass(frozen=True)
class AblationRow:
    name: str
    recall: float
    success_rate: float
    recall_delta: float
    success_delta: float
    reference_drop_pct: float | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "configuration": self.name,
            "recall_at_k": self.recall,
            "success_rate": self.success_rate,
            "recall_delta": self.recall_delta,
            "success_delta": self.success_delta,
            "reference_drop_pct": self.reference_drop_pct,
        }


@dataclass
class AblationReport:
    seed: int
    k: int
    rows: list[AblationRow]

    def row(self, name: str) -> AblationRow:
        return next(r for r in self.rows if r.name == name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "report": "ablation",
            "note": METRIC_NOTE,
            "seed": self.seed,
            "k": self.k,
            "configurations": [r.to_dict() for r in self.rows],
        }

    def table(self) -> str:
        rows = [("configuration", "R@k", "success", "dR", "dSuccess", "reference drop %")]
        for r in self.rows:
            ref = "-" if r.reference_drop_pct is None else f"{r.reference_drop_pct:.1f}"
            rows.append((r.name, f"{r.recall:.3f}", f"{r.success_rate:.3f}", f"{r.recall_delta:+.3f}",
                         f"{r.success_delta:+.3f}", ref))
        return _format_rows(rows) + f"\n({METRIC_NOTE}; k={self.k}, seed={self.seed})\n"


def _format_rows(rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))) for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def to_json(report: StageReport | AblationReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# agentic pipeline per query
# ---------------------------------------------------------------------------


@dataclass
class QueryOutcome:
    query: BenchmarkQuery
    result: PipelineResult
    passed: bool
    cites_relevant: bool
    reports: list[dict[str, Any]]

    @property
    def success(self) -> bool:
        return self.passed and self.cites_relevant

    def to_dict(self) -> dict[str, Any]:
        return {
            "query": self.query.id,
            "success": self.success,
            "pipeline": self.result.to_dict(),
            "validation": self.reports,
        }


def run_agentic(
    bench: SyntheticBenchmark,
    config: str = "full",
    params: RetrievalParams | None = None,
) -> list[QueryOutcome]:
    """Run plan -> cases -> validation for every query under one configuration."""
    if config not in ABLATIONS:
        raise ValueError(f"unknown configuration {config!r}")
    graph = bench.graph.copy()
    store = TraceabilityStore(graph)
    deps = PlannerDeps(
        indexes=bench.indexes(),
        graph=graph,
        store=store,
        params=params or RetrievalParams(),
        use_agents=config != "no_agents",
        use_graph=config != "no_graph",
        use_context_assembly=config != "no_context_assembly",
        use_traceability=config != "no_traceability",
    )
    budget = ValidationBudget()
    outcomes = []
    for q in bench.queries:
        result = run_pipeline([q.requirement], [], [], deps)
        reports = [validate_artifact(c, graph, store, budget) for c in result.cases]
        passed = bool(reports) and all(r.overall for r in reports)
        cites = any(set(c.source_refs) & set(q.relevant) for c in result.cases)
        outcomes.append(QueryOutcome(q, result, passed, cites, [r.to_dict() for r in reports]))
    return outcomes


def success_rate(outcomes: Sequence[QueryOutcome]) -> float:
    return sum(o.success for o in outcomes) / len(outcomes)


def context_recall(outcomes: Sequence[QueryOutcome], k: int) -> float:
    return sum(score_ranking(o.result.context.chunk_ids(), o.query.relevant, k)[1] for o in outcomes) / len(outcomes)


def pipeline_snapshot(bench: SyntheticBenchmark, workers: int) -> str:
    """Canonical JSON of every pipeline output; must not depend on ``workers``."""
    outcomes = run_agentic(bench, "full", RetrievalParams(workers=workers))
    return json.dumps([o.to_dict() for o in outcomes], sort_keys=True, ensure_ascii=False)


# ---------------------------------------------------------------------------
# harnesses
# ---------------------------------------------------------------------------


def run_stages(bench: SyntheticBenchmark, k: int = 5, params: RetrievalParams | None = None) -> StageReport:
    params = (params or RetrievalParams()).with_(k=k)
    indexes = bench.indexes()
    stages: dict[StageMode, StageMetrics] = {}
    subset: dict[StageMode, StageMetrics] = {}
    graph_qs = {q.id for q in bench.graph_queries()}
    for mode in StageMode:
        pairs = {}
        for q in bench.queries:
            ranked = retrieve(q.text, mode, indexes, bench.graph, params).chunk_ids()
            pairs[q.id] = score_ranking(ranked, q.relevant, k)
        success = None
        if mode is StageMode.Agentic:
            success = success_rate(run_agentic(bench, "full", params))
        stages[mode] = _aggregate(list(pairs.values()), success)
        if graph_qs:
            subset[mode] = _aggregate([pairs[i] for i in sorted(graph_qs)])
    return StageReport(bench.seed, k, stages, subset)


def run_ablation(bench: SyntheticBenchmark, k: int = 5, params: RetrievalParams | None = None) -> AblationReport:
    """Each configuration disables exactly one component; deltas are against ``full``."""
    params = (params or RetrievalParams()).with_(k=k)
    measured = {}
    for name in ABLATIONS:
        outcomes = run_agentic(bench, name, params)
        measured[name] = (context_recall(outcomes, k), success_rate(outcomes))
    base_recall, base_success = measured["full"]
    rows = [
        AblationRow(name, rec, succ, rec - base_recall, succ - base_success, REFERENCE_ABLATION_DROP.get(name))
        for name, (rec, succ) in measured.items()
    ]
    return AblationReport(bench.seed, k, rows)
