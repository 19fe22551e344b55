"""Planner, specialist agents, prompt construction, routing and generators."""

from .agents import (
    Router,
    agent_change_mapping,
    agent_compliance,
    agent_integration_points,
    agent_legacy_analysis,
    agent_test_cases,
    intent_of,
)
from .generator import Generator, GeneratorTier, StubGenerator, parse_case_output
from .models import (
    BusinessIntent,
    ComplianceReport,
    FunctionalChange,
    Objective,
    Step,
    TestCase,
    TestPlan,
)
from .planner import (
    PLANNER_STEPS,
    PipelineResult,
    PlannerDeps,
    generate_cases,
    generate_test_plan,
    run_pipeline,
)
from .prompts import LAYER_NAMES, CaseTask, PromptProfile, PromptStack, build_prompt
from .router import complexity_score, route_complexity

__all__ = [
    "BusinessIntent",
    "CaseTask",
    "ComplianceReport",
    "FunctionalChange",
    "Generator",
    "GeneratorTier",
    "LAYER_NAMES",
    "Objective",
    "PLANNER_STEPS",
    "PipelineResult",
    "PlannerDeps",
    "PromptProfile",
    "PromptStack",
    "Router",
    "Step",
    "StubGenerator",
    "TestCase",
    "TestPlan",
    "agent_change_mapping",
    "agent_compliance",
    "agent_integration_points",
    "agent_legacy_analysis",
    "agent_test_cases",
    "build_prompt",
    "complexity_score",
    "generate_cases",
    "generate_test_plan",
    "intent_of",
    "parse_case_output",
    "route_complexity",
    "run_pipeline",
]
