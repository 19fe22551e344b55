from __future__ import annotations

import json
import os
import subprocess
import sys

import pytest

from qerag.cli import main

from conftest import DEMO_DIR


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    ws = root / "ws"
    assert main(["ingest", str(DEMO_DIR / "raw.jsonl"), "-o", str(root / "corpus.jsonl")]) == 0
    assert main(["index", "build", str(root / "corpus.jsonl"), "-o", str(ws)]) == 0
    assert main(["--index-dir", str(ws), "graph", "import", str(DEMO_DIR / "graph.json")]) == 0
    return root, ws


def run(ws, *argv):
    return main(["--index-dir", str(ws), *argv])


def test_query_missing_index(tmp_path, capsys):
    assert run(tmp_path / "empty", "query", "anything") == 2
    assert "index not found" in capsys.readouterr().err


def test_usage_error_exit_1(capsys):
    assert_exit = pytest.raises(SystemExit)
    with assert_exit as info:
        main(["frobnicate"])
    assert info.value.code == 1


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--help"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    assert "retrieval.threshold = 0.82" in out
    assert "graph.weight.Requires = 0.9" in out


def test_bad_config_exit_2(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[retrieval]\nnope = 1\n")
    assert main(["--config", str(cfg), "query", "x"]) == 2


def test_query_json_round_trips(workspace, capsys):
    _, ws = workspace
    capsys.readouterr()
    assert run(ws, "query", "credit limit check blocks sales order", "--mode", "basic", "--json") == 0
    data = json.loads(capsys.readouterr().out)
    assert data["mode"] == "basic" and data["items"]
    assert data["items"] == sorted(data["items"], key=lambda i: (-i["score"], i["chunk_id"]))


def test_unknown_node_is_exit_1(workspace):
    _, ws = workspace
    assert run(ws, "impact", "--node", "NOPE") == 1


def test_generate_trace_validate(workspace, capsys, tmp_path):
    root, ws = workspace
    assert run(ws, "generate", "plan", "--req", "REQ-001", "--req", "REQ-002", "-o", str(tmp_path / "p.json")) == 0
    assert run(ws, "generate", "cases", "--plan", str(tmp_path / "p.json")) == 0
    capsys.readouterr()
    assert run(ws, "trace", "coverage", "--req", "REQ-001,REQ-002", "--json") == 0
    assert json.loads(capsys.readouterr().out) == {"coverage": 1.0}
    assert run(ws, "trace", "coverage", "--require", "1.0") == 3  # REQ-003 not generated yet
    assert run(ws, "trace", "matrix", "-o", str(tmp_path / "m.csv")) == 0
    header = (tmp_path / "m.csv").read_text().splitlines()[0]
    assert header.startswith("requirement_id,")
    cases = sorted((ws / "artifacts" / "cases").glob("*.json"))
    assert run(ws, "validate", *map(str, cases)) == 0
    capsys.readouterr()
    assert run(ws, "impact", "--node", "CFG-CREDIT", "--depth", "2") == 0
    report = json.loads(capsys.readouterr().out)
    assert report["changed"] == "CFG-CREDIT"


def test_validate_failure_exit_3(workspace, tmp_path):
    _, ws = workspace
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"id": "TC-X", "title": "t", "preconditions": [], "steps": [], "priority": 1,
                               "requirement_refs": ["REQ-001"]}))
    assert run(ws, "validate", str(bad)) == 3


def test_validate_unparsable_exit_2(workspace, tmp_path):
    _, ws = workspace
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert run(ws, "validate", str(bad)) == 2


def test_eval_stages_byte_identical(capsys):
    outputs = []
    for _ in range(2):
        assert main(["eval", "stages", "--seed", "7", "--json"]) == 0
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]
    assert json.loads(outputs[0])["report"] == "stages"


def test_eval_ablation_table(capsys):
    assert main(["eval", "ablation", "--demo"]) == 0
    out = capsys.readouterr().out
    for name in ("full", "no_agents", "no_graph", "no_context_assembly", "no_traceability"):
        assert name in out


def test_demo_script(tmp_path):
    env = dict(os.environ, PYTHON=sys.executable, WORK=str(tmp_path))
    proc = subprocess.run(["sh", str(DEMO_DIR / "run.sh")], env=env, capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    assert "requirement coverage: 1.0000" in proc.stdout
    assert "FAIL" not in proc.stdout
