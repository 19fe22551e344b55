"""Exact top-k similarity index over chunk embeddings."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus
from .embedding import EmbedderSpec, embed_batch, make_embedder
from .errors import DimMismatch, EmptyCorpus, FormatViolation, IoFailure

DEFAULT_THRESHOLD = 0.82
SNAPSHOT_FORMAT = "qerag-vector-index"
SNAPSHOT_VERSION = 1


class Metric(str, enum.Enum):
    Cosine = "cosine"
    Euclidean = "euclidean"
    DotProduct = "dot"

    @classmethod
    def parse(cls, value: "str | Metric") -> "Metric":
        if isinstance(value, cls):
            return value
        lowered = str(value).lower()
        for m in cls:
            if lowered in (m.value, m.name.lower()):
                return m
        raise ValueError(f"unknown metric: {value!r}")


@dataclass(frozen=True)
class ScoredHit:
    chunk_id: str
    score: float
    rank: int


def similarity(a: Sequence[float], b: Sequence[float], metric: Metric | str = Metric.Cosine) -> float:
    """Similarity where higher is better; Euclidean distance d maps to 1/(1+d)."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise DimMismatch(f"dimension mismatch: {va.shape} vs {vb.shape}")
    metric = Metric.parse(metric)
    if metric is Metric.Cosine:
        denom = float(np.linalg.norm(va) * np.linalg.norm(vb))
        if denom == 0.0:
            return 0.0
        return max(-1.0, min(1.0, float(va @ vb) / denom))
    if metric is Metric.Euclidean:
        return 1.0 / (1.0 + float(np.linalg.norm(va - vb)))
    return float(va @ vb)


class VectorIndex:
    """Exact linear-scan index; hits are ranked by descending score then id."""

    def __init__(
        self,
        dim: int,
        metric: Metric | str = Metric.Cosine,
        threshold: float = DEFAULT_THRESHOLD,
        spec: EmbedderSpec | None = None,
    ):
        self.dim = dim
        self.metric = Metric.parse(metric)
        self.threshold = float(threshold)
        self.spec = spec or EmbedderSpec(dim=dim)
        if self.spec.dim != dim:
            raise DimMismatch(f"embedder dim {self.spec.dim} != index dim {dim}")
        self._ids: list[str] = []
        self._pos: dict[str, int] = {}
        self._matrix = np.zeros((0, dim), dtype=np.float64)
        self._norms = np.zeros(0, dtype=np.float64)

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, chunk_id: object) -> bool:
        return chunk_id in self._pos

    @property
    def ids(self) -> list[str]:
        return list(self._ids)

    def vector(self, chunk_id: str) -> np.ndarray:
        return self._matrix[self._pos[chunk_id]].copy()

    def add(self, chunk_id: str, vector: Sequence[float]) -> None:
        self.add_many([chunk_id], [vector])

    def add_many(self, ids: Sequence[str], vectors: Iterable[Sequence[float]]) -> None:
        rows = np.asarray([np.asarray(v, dtype=np.float64) for v in vectors], dtype=np.float64)
        if len(ids) == 0:
            return
        if rows.ndim != 2 or rows.shape[1] != self.dim:
            raise DimMismatch(f"expected vectors of dim {self.dim}, got shape {rows.shape}")
        if len(rows) != len(ids):
            raise ValueError("ids and vectors differ in length")
        new_rows = []
        new_ids = []
        for cid, row in zip(ids, rows):
            if cid in self._pos:
                self._matrix[self._pos[cid]] = row
                self._norms[self._pos[cid]] = np.linalg.norm(row)
            else:
                self._pos[cid] = len(self._ids) + len(new_ids)
                new_ids.append(cid)
                new_rows.append(row)
        if new_rows:
            block = np.vstack(new_rows)
            self._matrix = np.vstack([self._matrix, block])
            self._norms = np.concatenate([self._norms, np.linalg.norm(block, axis=1)])
            self._ids.extend(new_ids)

    def scores(self, query: Sequence[float]) -> np.ndarray:
        q = np.asarray(query, dtype=np.float64)
        if q.shape != (self.dim,):
            raise DimMismatch(f"query dim {q.shape} != index dim {self.dim}")
        if self.metric is Metric.Cosine:
            denom = self._norms * np.linalg.norm(q)
            raw = self._matrix @ q
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(denom > 0, raw / np.where(denom > 0, denom, 1.0), 0.0)
            return np.clip(out, -1.0, 1.0)
        if self.metric is Metric.Euclidean:
            return 1.0 / (1.0 + np.linalg.norm(self._matrix - q, axis=1))
        return self._matrix @ q

    def search_vector(self, query: Sequence[float], k: int, threshold: float | None = None) -> list[ScoredHit]:
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self._ids:
            return []
        tau = self.threshold if threshold is None else threshold
        scores = self.scores(query)
        keep = np.nonzero(scores >= tau)[0]
        ranked = sorted(((-float(scores[i]), self._ids[i]) for i in keep))[:k]
        return [ScoredHit(cid, -neg, rank) for rank, (neg, cid) in enumerate(ranked, start=1)]

    def to_dict(self) -> dict:
        return {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "dim": self.dim,
            "metric": self.metric.value,
            "threshold": self.threshold,
            "embedder": self.spec.to_dict(),
            "ids": list(self._ids),
            "vectors": self._matrix.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VectorIndex":
        if data.get("format") != SNAPSHOT_FORMAT or data.get("version") != SNAPSHOT_VERSION:
            raise FormatViolation("not a vector index snapshot (bad format/version header)")
        try:
            spec = EmbedderSpec(**data["embedder"])
            index = cls(data["dim"], data["metric"], data["threshold"], spec)
            index.add_many(data["ids"], data["vectors"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatViolation(f"invalid vector index snapshot: {exc}") from exc
        if len(index) != len(data["ids"]):
            raise FormatViolation("duplicate ids in vector index snapshot")
        return index

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VectorIndex):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.metric is other.metric
            and self.threshold == other.threshold
            and self.spec == other.spec
            and self._ids == other._ids
            and np.array_equal(self._matrix, other._matrix)
        )


def build_index(
    corpus: Corpus,
    spec: EmbedderSpec | None = None,
    metric: Metric | str = Metric.Cosine,
    threshold: float = DEFAULT_THRESHOLD,
    workers: int = 1,
) -> VectorIndex:
    if len(corpus) == 0:
        raise EmptyCorpus("cannot build an index over an empty corpus")
    spec = spec or EmbedderSpec()
    index = VectorIndex(spec.dim, metric, threshold, spec)
    vectors = embed_batch([c.text for c in corpus], embedder=make_embedder(spec), workers=workers)
    index.add_many(corpus.ids(), vectors)
    return index


def search(index: VectorIndex, query_text: str, k: int, threshold: float | None = None) -> list[ScoredHit]:
    """Embed ``query_text`` with the index's embedder and return the top-k hits >= threshold."""
    if k < 1:
        raise ValueError("k must be >= 1")
    query = make_embedder(index.spec).embed(query_text)
    return index.search_vector(query, k, threshold)


def save_index(index: VectorIndex, path: str | Path) -> None:
    try:
        Path(path).write_text(json.dumps(index.to_dict()), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_index(path: str | Path) -> VectorIndex:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatViolation(f"{path}: invalid JSON: {exc}") from exc
    return VectorIndex.from_dict(data)


__all__ = [
    "DEFAULT_THRESHOLD",
    "Metric",
    "ScoredHit",
    "VectorIndex",
    "build_index",
    "load_index",
    "save_index",
    "search",
    "similarity",
]
