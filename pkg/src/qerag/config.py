"""Flat INI configuration with every default embedded.

Keys are ``section.option``; graph edge weights use ``[graph]`` options named
``weight.<EdgeType>``. Unknown sections or options are rejected.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .errors import ConfigError
from .graph import DEFAULT_EDGE_WEIGHTS, EdgeType
from .retrieval.conflicts import ConflictParams
from .retrieval.engine import RetrievalParams
from .validation import ValidationBudget


def _float(v: str) -> float:
    return float(v)


def _csv(v: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in v.split(",") if s.strip())


@dataclass(frozen=True)
class Option:
    default: Any
    parse: Callable[[str], Any]
    help: str


OPTIONS: dict[str, Option] = {
    "embedder.name": Option("hash-ngram", str, "embedding function"),
    "embedder.dim": Option(384, int, "vector dimension (384, 768 or 1024)"),
    "index.metric": Option("cosine", str, "cosine, euclidean or dot"),
    "retrieval.alpha": Option(0.6, _float, "graph share of the fused hybrid score"),
    "retrieval.gamma": Option(0.5, _float, "per-hop decay of graph expansion"),
    "retrieval.depth": Option(2, int, "graph expansion depth"),
    "retrieval.threshold": Option(0.82, _float, "minimum vector similarity"),
    "retrieval.token_budget": Option(2000, int, "context token budget"),
    "retrieval.workers": Option(8, int, "context assembly threads (1-8)"),
    "retrieval.k": Option(5, int, "vector hits per query"),
    "impact.decay": Option(0.7, _float, "per-hop decay of change impact"),
    "impact.depth": Option(4, int, "maximum impact propagation depth"),
    "validation.perf_budget_ms": Option(5000.0, _float, "generation time budget (advisory)"),
    "validation.max_bytes": Option(65536, int, "artifact size budget (advisory)"),
    "router.threshold": Option(5.0, _float, "complexity score routed to the heavy tier"),
    "conflict.credibility_band": Option(0.1, _float, "credibility gap treated as a tie"),
    "conflict.authoritative_sources": Option((), _csv, "comma-separated authoritative source names"),
    "paths.index_dir": Option("qerag-index", str, "directory holding index, graph, corpus and traces"),
    "eval.seed": Option(7, int, "benchmark seed"),
    "eval.n_docs": Option(200, int, "minimum benchmark corpus size"),
    "eval.n_queries": Option(40, int, "benchmark queries"),
    "eval.graph_fraction": Option(0.5, _float, "share of queries answerable only through the graph"),
    "eval.k": Option(5, int, "cut-off for precision and recall"),
}
for _t in EdgeType:
    OPTIONS[f"graph.weight.{_t.value}"] = Option(DEFAULT_EDGE_WEIGHTS[_t], _float, f"default {_t.value} edge weight")


@dataclass
class Config:
    values: dict[str, Any] = field(default_factory=lambda: {k: o.default for k, o in OPTIONS.items()})

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def retrieval_params(self) -> RetrievalParams:
        v = self.values
        return RetrievalParams(
            alpha=v["retrieval.alpha"],
            gamma=v["retrieval.gamma"],
            depth=v["retrieval.depth"],
            threshold=v["retrieval.threshold"],
            token_budget=v["retrieval.token_budget"],
            workers=v["retrieval.workers"],
            k=v["retrieval.k"],
            conflict=ConflictParams(v["conflict.credibility_band"], frozenset(v["conflict.authoritative_sources"])),
        )

    def edge_weights(self) -> dict[EdgeType, float]:
        return {t: self.values[f"graph.weight.{t.value}"] for t in EdgeType}

    def validation_budget(self) -> ValidationBudget:
        return ValidationBudget(self.values["validation.perf_budget_ms"], self.values["validation.max_bytes"])


def _check(values: dict[str, Any]) -> None:
    if not 1 <= values["retrieval.workers"] <= 8:
        raise ConfigError("retrieval.workers must be in 1..8")
    for key in ("retrieval.alpha", "retrieval.gamma", "impact.decay", "eval.graph_fraction"):
        if not 0.0 <= values[key] <= 1.0:
            raise ConfigError(f"{key} must be in [0, 1]")
    for key in ("retrieval.depth", "retrieval.k", "impact.depth", "retrieval.token_budget"):
        if values[key] < (1 if key == "retrieval.k" else 0):
            raise ConfigError(f"{key} is out of range")
    for t in EdgeType:
        if not 0.0 < values[f"graph.weight.{t.value}"] <= 1.0:
            raise ConfigError(f"graph.weight.{t.value} must be in (0, 1]")


def load_config(path: str | Path | None = None) -> Config:
    cfg = Config()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str  # keep EdgeType capitalisation
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    for section in parser.sections():
        for option, raw in parser.items(section):
            key = f"{section}.{option}"
            if key not in OPTIONS:
                raise ConfigError(f"unknown config key: {key}")
            try:
                cfg.values[key] = OPTIONS[key].parse(raw.strip())
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    _check(cfg.values)
    return cfg


def _show(value: Any) -> str:
    if isinstance(value, tuple):
        return ",".join(value) or "(empty)"
    return str(value)


def defaults_help() -> str:
    """Every config key with its default, for ``--help``."""
    lines = ["configuration keys (INI, [section] then option = value) and defaults:"]
    for key, opt in OPTIONS.items():
        lines.append(f"  {key} = {_show(opt.default)}  ({opt.help})")
    return "\n".join(lines)
