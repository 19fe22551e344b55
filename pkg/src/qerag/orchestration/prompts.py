"""Five-layer prompt construction.

A rendered prompt is five sections in fixed order, each introduced by a
``### LAYER:<name>`` line. Structured slots use ``KEY: value`` lines so that
any generator (including the offline stub) can read them back.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import MissingTemplate
from ..retrieval.conflicts import extract_facts
from ..retrieval.types import ContextBundle

LAYER_NAMES = ("context", "specification", "template", "validation", "enhancement")
DELIMITER = "### LAYER:"
SNIPPET_TOKENS = 40

TEMPLATES: dict[str, str] = {
    "test_case": (
        "Respond with one test case using exactly these line prefixes, one item per line:\n"
        "ID: <case id>\n"
        "TITLE: <short imperative title>\n"
        "PRIORITY: <1-4>\n"
        "REQUIREMENTS: <comma-separated requirement ids>\n"
        "INTEGRATIONS: <comma-separated interface ids or empty>\n"
        "SOURCES: <comma-separated context chunk ids used>\n"
        "PRECONDITION: <text> (repeatable)\n"
        "STEP: <action> || <expected result> || <node id or empty> (repeatable, in order)"
    ),
}


@dataclass(frozen=True)
class PromptProfile:
    organization: str = "Enterprise QE"
    domain: str = "SAP ECC to S/4HANA migration"
    template: str = "test_case"
    test_standard: str = "company standard test case format"
    best_practices: tuple[str, ...] = (
        "Prefer end-to-end business scenarios over isolated transactions.",
        "State one observable expected result per step.",
    )


@dataclass(frozen=True)
class CaseTask:
    """Everything the case agent knows about one objective."""

    case_id: str
    requirement_id: str
    requirement_label: str
    objective: str
    processes: tuple[tuple[str, str], ...] = ()
    validates: tuple[str, ...] = ()
    interfaces: tuple[tuple[str, str], ...] = ()
    regulations: tuple[str, ...] = ()
    intents: tuple[str, ...] = ()
    context_size: int = 0
    tier: str = "Light"
    kind: str = "test_case"


@dataclass(frozen=True)
class PromptStack:
    context: str
    specification: str
    template: str
    validation: str
    enhancement: str

    def layers(self) -> list[tuple[str, str]]:
        return [(name, getattr(self, name)) for name in LAYER_NAMES]

    def render(self) -> str:
        return "".join(f"{DELIMITER}{name}\n{body.rstrip()}\n" for name, body in self.layers())

    def layer(self, name: str) -> str:
        return getattr(self, name)

    @classmethod
    def parse(cls, text: str) -> "PromptStack":
        sections: dict[str, list[str]] = {}
        current = None
        for line in text.splitlines():
            if line.startswith(DELIMITER):
                current = line[len(DELIMITER):].strip()
                sections[current] = []
            elif current is not None:
                sections[current].append(line)
        if tuple(sections) != LAYER_NAMES:
            raise ValueError(f"prompt must contain layers {LAYER_NAMES}, got {tuple(sections)}")
        return cls(**{k: "\n".join(v) for k, v in sections.items()})


def _snippet(text: str, n: int = SNIPPET_TOKENS) -> str:
    tokens = text.split()
    return " ".join(tokens[:n]) + (" ..." if len(tokens) > n else "")


def _context_layer(task: CaseTask, context: ContextBundle, profile: PromptProfile) -> str:
    lines = [
        f"DOMAIN: {profile.domain}",
        f"ORGANIZATION: {profile.organization}",
        f"OBJECTIVE: {task.objective}",
    ]
    if not context.items:
        lines.append("NOTE: no retrieved context; rely on the specification layer.")
    for item in context.items:
        lines.append(f"SOURCE: {item.chunk_id} | {item.title} | score={item.score:.4f}")
        lines.append(f"  {_snippet(item.text)}")
        for fact in extract_facts(item.text):
            lines.append(f"FACT: {fact.key} = {fact.value}")
    return "\n".join(lines)


def _specification_layer(task: CaseTask) -> str:
    lines = [
        f"CASE-ID: {task.case_id}",
        f"REQUIREMENT: {task.requirement_id} | {task.requirement_label}",
        f"TIER: {task.tier}",
    ]
    lines += [f"PROCESS: {pid} | {label}" for pid, label in task.processes]
    lines += [f"VALIDATES: {v}" for v in task.validates]
    lines += [f"INTERFACE: {iid} | {label}" for iid, label in task.interfaces]
    lines.append("CONSTRAINT: every step must be executable in the target system without production data.")
    return "\n".join(lines)


def _validation_layer(task: CaseTask, profile: PromptProfile) -> str:
    lines = [
        "RULE: the case must reference at least one requirement id.",
        "RULE: steps are numbered from 1 without gaps; each step has an expected result.",
        f"RULE: follow the {profile.test_standard}.",
    ]
    lines += [f"COMPLIANCE: {r}" for r in task.regulations]
    return "\n".join(lines)


def _enhancement_layer(task: CaseTask, profile: PromptProfile) -> str:
    lines = [f"INTENT: {i}" for i in task.intents]
    lines += [f"PRACTICE: {p}" for p in profile.best_practices]
    if not lines:
        lines.append("PRACTICE: none recorded")
    return "\n".join(lines)


def build_prompt(task: CaseTask, context: ContextBundle, profile: PromptProfile | None = None) -> PromptStack:
    profile = profile or PromptProfile()
    template_name = profile.template if task.kind == "test_case" else task.kind
    if template_name not in TEMPLATES:
        raise MissingTemplate(f"no prompt template named {template_name!r}")
    return PromptStack(
        context=_context_layer(task, context, profile),
        specification=_specification_layer(task),
        template=TEMPLATES[template_name],
        validation=_validation_layer(task, profile),
        enhancement=_enhancement_layer(task, profile),
    )


def prompt_values(layer_text: str, key: str) -> list[str]:
    """Values of ``KEY: value`` lines in a layer."""
    prefix = f"{key}:"
    return [line[len(prefix):].strip() for line in layer_text.splitlines() if line.startswith(prefix)]


def split_pipe(value: str, parts: int) -> list[str]:
    pieces = [p.strip() for p in value.split("|", parts - 1)]
    return pieces + [""] * (parts - len(pieces))
