"""Generated artifact records and intermediate agent outputs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class Step:
    index: int
    action: str
    expected: str
    ref: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"index": self.index, "action": self.action, "expected": self.expected, "ref": self.ref}


@dataclass
class TestCase:
    id: str
    title: str
    preconditions: list[str]
    steps: list[Step]
    priority: int
    requirement_refs: list[str]
    integration_refs: list[str] = field(default_factory=list)
    compliance_tags: list[str] = field(default_factory=list)
    source_refs: list[str] = field(default_factory=list)

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "title": self.title,
            "preconditions": list(self.preconditions),
            "steps": [s.to_dict() for s in self.steps],
            "priority": self.priority,
            "requirement_refs": list(self.requirement_refs),
            "integration_refs": list(self.integration_refs),
            "compliance_tags": list(self.compliance_tags),
            "source_refs": list(self.source_refs),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TestCase":
        return cls(
            id=d["id"],
            title=d["title"],
            preconditions=list(d["preconditions"]),
            steps=[Step(s["index"], s["action"], s["expected"], s.get("ref")) for s in d["steps"]],
            priority=d["priority"],
            requirement_refs=list(d["requirement_refs"]),
            integration_refs=list(d.get("integration_refs", [])),
            compliance_tags=list(d.get("compliance_tags", [])),
            source_refs=list(d.get("source_refs", [])),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


@dataclass
class Objective:
    id: str
    text: str
    requirement_refs: list[str]
    legacy_refs: list[str] = field(default_factory=list)
    legacy_intents: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "text": self.text,
            "requirement_refs": list(self.requirement_refs),
            "legacy_refs": list(self.legacy_refs),
            "legacy_intents": list(self.legacy_intents),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Objective":
        return cls(d["id"], d["text"], list(d["requirement_refs"]), list(d["legacy_refs"]), list(d["legacy_intents"]))


@dataclass
class TestPlan:
    id: str
    scope: dict[str, str]
    objectives: list[Objective]
    strategy: dict[str, str]
    cases: list[str] = field(default_factory=list)
    trace_links: list[str] = field(default_factory=list)

    __test__ = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "scope": dict(self.scope),
            "objectives": [o.to_dict() for o in self.objectives],
            "strategy": dict(self.strategy),
            "cases": list(self.cases),
            "trace_links": list(self.trace_links),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TestPlan":
        return cls(
            id=d["id"],
            scope=dict(d["scope"]),
            objectives=[Objective.from_dict(o) for o in d["objectives"]],
            strategy=dict(d["strategy"]),
            cases=list(d["cases"]),
            trace_links=list(d["trace_links"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def requirement_ids(self) -> list[str]:
        return sorted({r for o in self.objectives for r in o.requirement_refs})


@dataclass(frozen=True)
class BusinessIntent:
    legacy_chunk: str
    intent: str
    referenced_nodes: tuple[str, ...] = ()


@dataclass(frozen=True)
class FunctionalChange:
    requirement: str
    old_components: tuple[str, ...]
    new_components: tuple[str, ...]
    unmapped: tuple[str, ...]

    @property
    def flagged_unmapped(self) -> bool:
        return bool(self.unmapped)


@dataclass
class ComplianceReport:
    tags_added: dict[str, list[str]] = field(default_factory=dict)
    regulated_requirements: list[str] = field(default_factory=list)
    untagged_requirements: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "tags_added": {k: list(v) for k, v in sorted(self.tags_added.items())},
            "regulated_requirements": list(self.regulated_requirements),
            "untagged_requirements": list(self.untagged_requirements),
        }
