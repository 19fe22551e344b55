"""Command-line entry point.

Exit codes: 0 ok, 1 usage, 2 I/O or format error, 3 validation failure,
4 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .config import Config, defaults_help, load_config
from .corpus import Corpus, SourceKind, ingest, load_corpus, read_raw_records, save_corpus
from .embedding import EmbedderSpec
from .errors import ConfigError, FormatError, IndexMissing, IoFailure, QeragError, ValidationFailed
from .eval import demo_benchmark, make_benchmark, run_ablation, run_stages, to_json
from .graph import KnowledgeGraph, NodeType, load_graph, save_graph
from .orchestration import PlannerDeps, TestPlan, generate_cases, generate_test_plan
from .retrieval import Indexes, StageMode, retrieve
from .traceability import coverage, impact, load_store, matrix, save_store
from .validation import validate_artifact
from .vector_index import build_index, load_index, save_index

EXIT_OK, EXIT_USAGE, EXIT_FORMAT, EXIT_VALIDATION, EXIT_INTERNAL = 0, 1, 2, 3, 4

INDEX_FILE = "index.json"
GRAPH_FILE = "graph.json"
CORPUS_FILE = "corpus.jsonl"
TRACE_FILE = "trace.json"
ARTIFACT_DIR = "artifacts"

SKELETON_TYPES = {
    SourceKind.Requirement: NodeType.Requirement,
    SourceKind.LegacyTest: NodeType.TestCase,
    SourceKind.ChangeRequest: NodeType.ChangeRequest,
    SourceKind.ExecutionResult: NodeType.ExecutionResult,
    SourceKind.BusinessProcessMap: NodeType.BusinessProcess,
    SourceKind.ConfigGuide: NodeType.Configuration,
    SourceKind.SapDoc: NodeType.Component,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit 2; usage errors are 1 here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _Formatter(argparse.RawDescriptionHelpFormatter, argparse.ArgumentDefaultsHelpFormatter):
    def _get_help_string(self, action):
        if action.default is None:
            return action.help
        return super()._get_help_string(action)


# ---------------------------------------------------------------------------
# workspace helpers
# ---------------------------------------------------------------------------


class Workspace:
    def __init__(self, root: Path, cfg: Config):
        self.root = root
        self.cfg = cfg

    def path(self, name: str) -> Path:
        return self.root / name

    def require_index(self) -> None:
        if not self.path(INDEX_FILE).exists():
            raise IndexMissing(f"index not found in {self.root}")

    def corpus(self) -> Corpus:
        self.require_index()
        return load_corpus(self.path(CORPUS_FILE))

    def graph(self) -> KnowledgeGraph:
        self.require_index()
        return load_graph(self.path(GRAPH_FILE), self.cfg.edge_weights())

    def indexes(self) -> Indexes:
        self.require_index()
        return Indexes(self.corpus(), load_index(self.path(INDEX_FILE)))

    def artifact(self, kind: str, artifact_id: str) -> Path:
        return self.root / ARTIFACT_DIR / kind / f"{artifact_id}.json"


def skeleton_graph(corpus: Corpus, cfg: Config) -> KnowledgeGraph:
    """One node per document, typed by source kind and owning all its chunks."""
    g = KnowledgeGraph(cfg.edge_weights())
    for chunk in corpus:
        g.add_node(chunk.doc_id, SKELETON_TYPES[chunk.kind], label=chunk.title, chunk_refs=[chunk.id])
    return g


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _emit(data: Any) -> None:
    sys.stdout.write(json.dumps(data, indent=2, ensure_ascii=False) + "\n")


def _ids(values: Sequence[str] | None) -> list[str]:
    out: list[str] = []
    for v in values or []:
        out += [s.strip() for s in v.split(",") if s.strip()]
    return out


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_ingest(args, ws: Workspace) -> int:
    corpus = ingest(read_raw_records(args.raw))
    save_corpus(corpus, args.output)
    print(f"ingested {len(corpus)} chunks -> {args.output}")
    return EXIT_OK


def cmd_index_build(args, ws: Workspace) -> int:
    cfg = ws.cfg
    corpus = load_corpus(args.corpus)
    spec = EmbedderSpec(cfg["embedder.name"], cfg["embedder.dim"])
    index = build_index(corpus, spec, cfg["index.metric"], cfg["retrieval.threshold"], cfg["retrieval.workers"])
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / ARTIFACT_DIR).mkdir(exist_ok=True)
    save_index(index, out / INDEX_FILE)
    save_corpus(corpus, out / CORPUS_FILE)
    graph = skeleton_graph(corpus, cfg)
    save_graph(graph, out / GRAPH_FILE)
    save_store(load_store(out / TRACE_FILE, graph), out / TRACE_FILE)
    print(f"indexed {len(index)} chunks, {len(graph)} graph nodes -> {out}")
    return EXIT_OK


def cmd_graph_import(args, ws: Workspace) -> int:
    graph = ws.graph()
    try:
        data = json.loads(Path(args.file).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {args.file}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{args.file}: invalid JSON: {exc}") from exc
    graph.merge_dict(data)
    graph.check_integrity()
    save_graph(graph, ws.path(GRAPH_FILE))
    print(f"graph now has {len(graph)} nodes and {graph.edge_count} edges")
    return EXIT_OK


def cmd_graph_export(args, ws: Workspace) -> int:
    text = json.dumps(ws.graph().to_dict(), indent=2, ensure_ascii=False) + "\n"
    if args.output:
        _write(Path(args.output), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_query(args, ws: Workspace) -> int:
    params = ws.cfg.retrieval_params().with_(k=args.k)
    indexes = ws.indexes()
    mode = StageMode.parse(args.mode)
    graph = ws.graph() if mode in (StageMode.HybridRag, StageMode.Agentic) else None
    bundle = retrieve(args.text, mode, indexes, graph, params)
    if args.json:
        _emit(bundle.to_dict())
        return EXIT_OK
    if not bundle.items:
        print("no hits")
    for rank, item in enumerate(bundle.items, start=1):
        print(f"{rank:>3}  {item.score:.4f}  {item.chunk_id:<24} {item.origin.kind.value:<15} {item.title}")
    for e in bundle.escalations:
        print(f"escalated: {e.key} between {', '.join(e.candidates)}")
    return EXIT_OK


def _deps(ws: Workspace, graph: KnowledgeGraph) -> PlannerDeps:
    return PlannerDeps(
        indexes=ws.indexes(),
        graph=graph,
        store=load_store(ws.path(TRACE_FILE), graph),
        params=ws.cfg.retrieval_params(),
        router_threshold=ws.cfg["router.threshold"],
    )


def cmd_generate_plan(args, ws: Workspace) -> int:
    graph = ws.graph()
    deps = _deps(ws, graph)
    plan = generate_test_plan(_ids(args.req), _ids(args.business), _ids(args.history), deps)
    path = ws.artifact("plans", plan.id)
    _write(path, plan.to_json())
    if args.output:
        _write(Path(args.output), plan.to_json())
    if args.json:
        _emit(plan.to_dict())
    else:
        print(f"plan {plan.id} with {len(plan.objectives)} objective(s) -> {path}")
    return EXIT_OK


def _load_plan(ws: Workspace, ref: str) -> TestPlan:
    path = Path(ref) if ref.endswith(".json") else ws.artifact("plans", ref)
    try:
        return TestPlan.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except OSError as exc:
        raise IoFailure(f"cannot read plan {ref}: {exc}") from exc
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"plan {ref} is malformed: {exc}") from exc


def cmd_generate_cases(args, ws: Workspace) -> int:
    graph = ws.graph()
    deps = _deps(ws, graph)
    plan = _load_plan(ws, args.plan)
    started = time.perf_counter()
    cases, report = generate_cases(plan, deps)
    elapsed = (time.perf_counter() - started) * 1000.0
    for case in cases:
        _write(ws.artifact("cases", case.id), case.to_json())
    _write(ws.artifact("plans", plan.id), plan.to_json())
    save_graph(graph, ws.path(GRAPH_FILE))
    save_store(deps.store, ws.path(TRACE_FILE))
    if args.json:
        _emit({"plan": plan.id, "cases": [c.to_dict() for c in cases], "compliance": report.to_dict()})
    else:
        print(f"generated {len(cases)} case(s) for {plan.id} in {elapsed:.0f} ms; {len(plan.trace_links)} trace link(s)")
        for r in report.untagged_requirements:
            print(f"warning: regulated requirement {r} has no case carrying its tags")
    return EXIT_OK


def cmd_trace_matrix(args, ws: Workspace) -> int:
    graph = ws.graph()
    text = matrix(load_store(ws.path(TRACE_FILE), graph), graph).to_csv()
    if args.output:
        _write(Path(args.output), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_trace_coverage(args, ws: Workspace) -> int:
    graph = ws.graph()
    reqs = _ids(args.req) or None
    value = coverage(load_store(ws.path(TRACE_FILE), graph), graph, reqs)
    if args.json:
        _emit({"coverage": value})
    else:
        print(f"requirement coverage: {value:.4f}")
    if args.require is not None and value < args.require:
        raise ValidationFailed(f"coverage {value:.4f} is below the required {args.require}")
    return EXIT_OK


def cmd_impact(args, ws: Workspace) -> int:
    graph = ws.graph()
    depth = args.depth if args.depth is not None else ws.cfg["impact.depth"]
    report = impact(args.node, graph, load_store(ws.path(TRACE_FILE), graph), depth, ws.cfg["impact.decay"])
    _emit(report.to_dict())
    return EXIT_OK


def cmd_validate(args, ws: Workspace) -> int:
    graph = ws.graph()
    store = load_store(ws.path(TRACE_FILE), graph)
    failed = []
    reports = []
    for path in args.artifacts:
        report = validate_artifact(Path(path), graph, store, ws.cfg.validation_budget())
        reports.append(report.to_dict())
        if not report.overall:
            failed.append(f"{path} ({', '.join(l.value for l in report.failed_layers())})")
    if args.json:
        _emit(reports if len(reports) != 1 else reports[0])
    else:
        for r in reports:
            status = "PASS" if r["overall"] else "FAIL"
            layers = " ".join(f"{l['layer']}={'ok' if l['passed'] else 'FAIL'}" for l in r["layers"])
            print(f"{status} {r['subject']}: {layers}")
    if failed:
        raise ValidationFailed("validation failed: " + "; ".join(failed))
    return EXIT_OK


def _bench(args, cfg: Config):
    seed = args.seed if args.seed is not None else cfg["eval.seed"]
    if args.demo:
        return demo_benchmark(seed)
    return make_benchmark(seed, cfg["eval.n_docs"], cfg["eval.n_queries"], cfg["eval.graph_fraction"])


def cmd_eval(args, ws: Workspace) -> int:
    bench = _bench(args, ws.cfg)
    k = ws.cfg["eval.k"]
    params = ws.cfg.retrieval_params()
    report = run_stages(bench, k, params) if args.eval_cmd == "stages" else run_ablation(bench, k, params)
    if args.output:
        _write(Path(args.output), to_json(report))
    if args.json:
        sys.stdout.write(to_json(report))
    else:
        sys.stdout.write(report.table())
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="qerag",
        description="Hybrid vector/graph retrieval and test-artifact generation for ERP migration QA.",
        epilog=defaults_help() + "\n\nexit codes: 0 ok, 1 usage, 2 I/O or format, 3 validation failure, 4 internal",
        formatter_class=_Formatter,
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="INI config file (see keys below)")
    p.add_argument("--index-dir", help="workspace directory (default: paths.index_dir)")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def add(parent, name, func, help_text):
        sp = parent.add_parser(name, help=help_text, description=help_text, formatter_class=_Formatter)
        sp.set_defaults(func=func)
        return sp

    sp = add(sub, "ingest", cmd_ingest, "redact and chunk raw records into a corpus file")
    sp.add_argument("raw", help="raw records (JSON lines or JSON array)")
    sp.add_argument("-o", "--output", required=True, help="corpus JSON-lines output")

    idx = sub.add_parser("index", help="index management").add_subparsers(dest="index_cmd", required=True, parser_class=_Parser)
    sp = add(idx, "build", cmd_index_build, "build vector index and graph skeleton into a workspace")
    sp.add_argument("corpus")
    sp.add_argument("-o", "--output", required=True, help="workspace directory")

    gr = sub.add_parser("graph", help="knowledge graph import/export").add_subparsers(dest="graph_cmd", required=True, parser_class=_Parser)
    sp = add(gr, "import", cmd_graph_import, "merge a graph interchange file into the workspace graph")
    sp.add_argument("file")
    sp = add(gr, "export", cmd_graph_export, "write the workspace graph as interchange JSON")
    sp.add_argument("-o", "--output")

    sp = add(sub, "query", cmd_query, "retrieve ranked context for a text")
    sp.add_argument("text")
    sp.add_argument("--mode", default="hybrid", choices=[m.value for m in StageMode])
    sp.add_argument("--k", type=int, default=5)
    sp.add_argument("--json", action="store_true")

    gen = sub.add_parser("generate", help="test plan and case generation").add_subparsers(dest="gen_cmd", required=True, parser_class=_Parser)
    sp = add(gen, "plan", cmd_generate_plan, "synthesise a test plan")
    sp.add_argument("--req", action="append", required=True, help="requirement ids (repeatable or comma-separated)")
    sp.add_argument("--business", action="append", help="business process/component/configuration ids")
    sp.add_argument("--history", action="append", help="legacy test or execution-result chunk ids")
    sp.add_argument("-o", "--output", help="also write the plan JSON here")
    sp.add_argument("--json", action="store_true")
    sp = add(gen, "cases", cmd_generate_cases, "generate test cases for a plan and register trace links")
    sp.add_argument("--plan", required=True, help="plan id or path to a plan JSON file")
    sp.add_argument("--json", action="store_true")

    tr = sub.add_parser("trace", help="traceability reports").add_subparsers(dest="trace_cmd", required=True, parser_class=_Parser)
    sp = add(tr, "matrix", cmd_trace_matrix, "requirements x test cases CSV")
    sp.add_argument("-o", "--output")
    sp = add(tr, "coverage", cmd_trace_coverage, "fraction of requirements with a linked test case")
    sp.add_argument("--req", action="append", help="restrict to these requirement ids")
    sp.add_argument("--require", type=float, help="exit 3 when coverage is below this value")
    sp.add_argument("--json", action="store_true")

    sp = add(sub, "impact", cmd_impact, "change impact analysis for a node")
    sp.add_argument("--node", required=True)
    sp.add_argument("--depth", type=int, help="default: impact.depth")

    sp = add(sub, "validate", cmd_validate, "run the seven validation layers on artifact files")
    sp.add_argument("artifacts", nargs="+")
    sp.add_argument("--json", action="store_true")

    ev = sub.add_parser("eval", help="synthetic benchmark reports").add_subparsers(dest="eval_cmd", required=True, parser_class=_Parser)
    for name, text in (("stages", "recall/precision per retrieval stage"), ("ablation", "component ablation")):
        sp = add(ev, name, cmd_eval, text)
        sp.add_argument("--seed", type=int, help="default: eval.seed")
        sp.add_argument("--demo", action="store_true", help="use the fixed demo benchmark")
        sp.add_argument("-o", "--output", help="also write the JSON report here")
        sp.add_argument("--json", action="store_true")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        ws = Workspace(Path(args.index_dir or cfg["paths.index_dir"]), cfg)
        return args.func(args, ws)
    except ValidationFailed as exc:
        print(f"qerag: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (FormatError, ConfigError) as exc:
        print(f"qerag: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (QeragError, ValueError) as exc:
        print(f"qerag: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        print(f"qerag: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
