"""Text embedders.

The built-in embedder is a signed feature-hashing vectorizer over word
unigrams and character 3-grams of each word (with ``<``/``>`` boundary
markers), L2-normalised. It needs no model files and is bit-for-bit
deterministic across processes.
"""

from __future__ import annotations

import hashlib
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol, Sequence

import numpy as np

from .errors import EmptyText, UnsupportedDim

SUPPORTED_DIMS = (384, 768, 1024)
DEFAULT_DIM = 384

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


@dataclass(frozen=True)
class EmbedderSpec:
    name: str = "hash-ngram"
    dim: int = DEFAULT_DIM
    deterministic: bool = True

    def __post_init__(self) -> None:
        if self.dim not in SUPPORTED_DIMS:
            raise UnsupportedDim(f"dimension {self.dim} not in {SUPPORTED_DIMS}")

    def to_dict(self) -> dict:
        return {"name": self.name, "dim": self.dim, "deterministic": self.deterministic}


class Embedder(Protocol):
    spec: EmbedderSpec

    def embed(self, text: str) -> np.ndarray: ...


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@lru_cache(maxsize=1 << 16)
def _feature_hash(feature: str) -> int:
    return int.from_bytes(hashlib.blake2b(feature.encode("utf-8"), digest_size=8).digest(), "little")


def _features(text: str) -> list[tuple[str, float]]:
    tokens = tokenize(text)
    if not tokens:
        # punctuation-only input still has to produce a vector
        tokens = [text.strip().lower()]
    feats: list[tuple[str, float]] = []
    for tok in tokens:
        feats.append(("w:" + tok, 1.0))
        padded = f"<{tok}>"
        for i in range(len(padded) - 2):
            feats.append(("g:" + padded[i : i + 3], 0.5))
    return feats


class HashingEmbedder:
    """Deterministic signed feature-hashing embedder."""

    def __init__(self, spec: EmbedderSpec | None = None):
        self.spec = spec or EmbedderSpec()

    def embed(self, text: str) -> np.ndarray:
        if not isinstance(text, str) or not text.strip():
            raise EmptyText("cannot embed empty text")
        dim = self.spec.dim
        vec = np.zeros(dim, dtype=np.float64)
        for feature, weight in _features(text):
            h = _feature_hash(feature)
            sign = 1.0 if (h >> 63) & 1 else -1.0
            vec[h % dim] += sign * weight
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            # signed collisions cancelled out; fall back to one stable bucket
            vec[_feature_hash("t:" + text) % dim] = 1.0
            return vec
        return vec / norm


def make_embedder(spec: EmbedderSpec) -> Embedder:
    if spec.name != "hash-ngram":
        raise ValueError(f"no built-in embedder named {spec.name!r}")
    return HashingEmbedder(spec)


def embed(text: str, spec: EmbedderSpec | None = None) -> np.ndarray:
    return HashingEmbedder(spec or EmbedderSpec()).embed(text)


def embed_batch(
    texts: Sequence[str],
    spec: EmbedderSpec | None = None,
    workers: int = 1,
    embedder: Embedder | None = None,
) -> list[np.ndarray]:
    """Embed many texts; output order always matches input order."""
    model = embedder or HashingEmbedder(spec or EmbedderSpec())
    for i, text in enumerate(texts):
        if not isinstance(text, str) or not text.strip():
            raise EmptyText("cannot embed empty text", index=i)
    if workers <= 1 or len(texts) < 2:
        return [model.embed(t) for t in texts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(model.embed, texts))
