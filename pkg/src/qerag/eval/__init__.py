"""Synthetic benchmark plus stage-progression and ablation harnesses."""

from .benchmark import BenchmarkQuery, SyntheticBenchmark, demo_benchmark, make_benchmark, token_overlap
from .harness import (
    ABLATIONS,
    REFERENCE_ABLATION_DROP,
    REFERENCE_STAGE_ACCURACY,
    AblationReport,
    StageReport,
    pipeline_snapshot,
    run_ablation,
    run_agentic,
    run_stages,
    score_ranking,
    to_json,
)

__all__ = [
    "ABLATIONS",
    "AblationReport",
    "BenchmarkQuery",
    "REFERENCE_ABLATION_DROP",
    "REFERENCE_STAGE_ACCURACY",
    "StageReport",
    "SyntheticBenchmark",
    "demo_benchmark",
    "make_benchmark",
    "pipeline_snapshot",
    "run_ablation",
    "run_agentic",
    "run_stages",
    "score_ranking",
    "to_json",
    "token_overlap",
]
