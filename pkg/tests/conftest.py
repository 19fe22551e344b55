from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
sys.path.insert(0, str(TESTS_DIR))

REPO_ROOT = TESTS_DIR.parent
DEMO_DIR = REPO_ROOT / "demo" / "sap-demo"
FIXTURES = TESTS_DIR / "fixtures"


@pytest.fixture
def demo_dir() -> Path:
    return DEMO_DIR


# Acceptance verdicts, one line per criterion, filled by test_acceptance.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
