"""Generator interface, the offline stub generator, and output parsing."""

from __future__ import annotations

import enum
from typing import Protocol, runtime_checkable

from .models import Step, TestCase
from .prompts import PromptStack, prompt_values, split_pipe


class GeneratorTier(str, enum.Enum):
    Light = "Light"
    Heavy = "Heavy"


@runtime_checkable
class Generator(Protocol):
    name: str
    deterministic: bool

    def generate(self, prompt: PromptStack) -> str: ...


class StubGenerator:
    """Template engine that fills a test-case skeleton from the prompt slots.

    Steps come from the PROCESS lines (expected results from VALIDATES
    targets), then one verification step per FACT and one per INTERFACE. The
    output is a pure function of the prompt, so it is safe to call
    concurrently.
    """

    deterministic = True

    def __init__(self, name: str = "stub"):
        self.name = name

    def generate(self, prompt: PromptStack) -> str:
        spec = prompt.specification
        case_id = (prompt_values(spec, "CASE-ID") or ["TC-UNNAMED"])[0]
        req_id, req_label = split_pipe((prompt_values(spec, "REQUIREMENT") or ["|"])[0], 2)
        tier = (prompt_values(spec, "TIER") or ["Light"])[0]
        processes = [split_pipe(v, 2) for v in prompt_values(spec, "PROCESS")]
        validates = prompt_values(spec, "VALIDATES")
        interfaces = [split_pipe(v, 2) for v in prompt_values(spec, "INTERFACE")]
        regulations = prompt_values(prompt.validation, "COMPLIANCE")
        sources = [split_pipe(v, 2)[0] for v in prompt_values(prompt.context, "SOURCE")]
        facts = [v.split(" = ", 1) for v in prompt_values(prompt.context, "FACT")]
        intents = prompt_values(prompt.enhancement, "INTENT")

        priority = 1 if regulations else (2 if tier == GeneratorTier.Heavy.value else 3)
        label = req_label or req_id
        lines = [
            f"ID: {case_id}",
            f"TITLE: Verify {label}",
            f"PRIORITY: {priority}",
            f"REQUIREMENTS: {req_id}",
            f"INTEGRATIONS: {', '.join(i for i, _ in interfaces)}",
            f"SOURCES: {', '.join(sources)}",
            f"PRECONDITION: Test data for '{label}' is prepared in a non-production client",
            "PRECONDITION: Tester holds the roles required by the scenario",
        ]
        steps: list[str] = []
        expected_default = f"Result satisfies '{validates[0]}'" if validates else "Step completes without errors"
        for pid, plabel in processes:
            steps.append(f"STEP: Execute business process '{plabel}' (requires P1) || {expected_default} || {pid}")
        for fact in facts:
            if len(fact) == 2:
                key, value = fact
                steps.append(f"STEP: Check setting {key} in the target system (requires P1) || {key} = {value} || ")
        for iid, ilabel in interfaces:
            steps.append(f"STEP: Trigger interface '{ilabel}' (requires P2) || Message is exchanged and acknowledged || {iid}")
        for intent in intents[:2]:
            steps.append(f"STEP: Re-run legacy scenario: {intent} || Legacy business outcome is preserved || ")
        if not steps:
            steps.append(f"STEP: Exercise the functionality of {req_id} (requires P1) || Behaviour matches {req_id} || ")
        return "\n".join(lines + steps) + "\n"


def parse_case_output(raw: str) -> TestCase:
    """Parse line-prefixed generator output; raises ``ValueError`` when malformed."""
    fields: dict[str, list[str]] = {}
    for line in raw.splitlines():
        if not line.strip():
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ValueError(f"unrecognised output line: {line!r}")
        fields.setdefault(key.strip().upper(), []).append(value.strip())

    def one(key: str) -> str:
        vals = fields.get(key)
        if not vals:
            raise ValueError(f"missing {key}")
        return vals[0]

    def many(key: str) -> list[str]:
        val = fields.get(key, [""])[0]
        return [v.strip() for v in val.split(",") if v.strip()]

    priority = int(one("PRIORITY"))
    if not 1 <= priority <= 4:
        raise ValueError("PRIORITY out of range")
    requirements = many("REQUIREMENTS")
    if not requirements:
        raise ValueError("no REQUIREMENTS")
    steps = []
    for i, raw_step in enumerate(fields.get("STEP", []), start=1):
        parts = [p.strip() for p in raw_step.split("||")]
        if len(parts) < 2 or not parts[0] or not parts[1]:
            raise ValueError(f"malformed STEP: {raw_step!r}")
        ref = parts[2] if len(parts) > 2 and parts[2] else None
        steps.append(Step(i, parts[0], parts[1], ref))
    if not steps:
        raise ValueError("no STEP lines")
    return TestCase(
        id=one("ID"),
        title=one("TITLE"),
        preconditions=fields.get("PRECONDITION", []),
        steps=steps,
        priority=priority,
        requirement_refs=requirements,
        integration_refs=many("INTEGRATIONS"),
        compliance_tags=[],
        source_refs=many("SOURCES"),
    )
