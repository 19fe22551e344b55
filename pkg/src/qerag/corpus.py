"""Corpus ingestion: PII redaction, windowed chunking and JSON-lines persistence."""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping

from .errors import EmptyText, FormatViolation, IoFailure, UnknownKind

REDACTION_MARKER = "[REDACTED]"
CHUNK_SIZE = 200
CHUNK_OVERLAP = 50


class SourceKind(str, enum.Enum):
    LegacyTest = "LegacyTest"
    SapDoc = "SapDoc"
    BusinessProcessMap = "BusinessProcessMap"
    ConfigGuide = "ConfigGuide"
    Requirement = "Requirement"
    ChangeRequest = "ChangeRequest"
    ExecutionResult = "ExecutionResult"

    @classmethod
    def parse(cls, tag: Any) -> "SourceKind":
        if isinstance(tag, cls):
            return tag
        try:
            return cls(tag)
        except ValueError:
            raise UnknownKind(f"unknown source kind: {tag!r}") from None


DEFAULT_CREDIBILITY: dict[SourceKind, float] = {
    SourceKind.ConfigGuide: 0.9,
    SourceKind.SapDoc: 0.85,
    SourceKind.BusinessProcessMap: 0.8,
    SourceKind.Requirement: 0.8,
    SourceKind.LegacyTest: 0.6,
    SourceKind.ChangeRequest: 0.7,
    SourceKind.ExecutionResult: 0.7,
}

# ---------------------------------------------------------------------------
# Redaction
# ---------------------------------------------------------------------------

_EMAIL_RE = re.compile(r"[A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*\.[A-Za-z]{2,}")
# national-id style: 123-45-6789 or a bare run of exactly nine digits
_ID_RE = re.compile(r"(?<!\d)(?:\d{3}-\d{2}-\d{4}|\d{9})(?!\d)")
# phone-like: 7+ digits joined by single separators, at least one separator or a leading '+'
_PHONE_RE = re.compile(r"(?<![\w])\+?\(?\d+\)?(?:[ .\-]\(?\d+\)?)+(?![\w])|\+\d{7,}(?!\w)")
_ISO_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}")


def _phone_sub(match: re.Match[str]) -> str:
    span = match.group(0)
    digits = sum(ch.isdigit() for ch in span)
    if digits < 7 or _ISO_DATE_RE.fullmatch(span):
        return span
    return REDACTION_MARKER


def _redact_once(text: str) -> tuple[str, int]:
    count = 0
    text, n = _EMAIL_RE.subn(REDACTION_MARKER, text)
    count += n
    text, n = _ID_RE.subn(REDACTION_MARKER, text)
    count += n

    replaced = 0

    def sub(match: re.Match[str]) -> str:
        nonlocal replaced
        out = _phone_sub(match)
        if out is REDACTION_MARKER:
            replaced += 1
        return out

    text = _PHONE_RE.sub(sub, text)
    return text, count + replaced


def redact(text: str) -> tuple[str, int]:
    """Replace e-mail addresses, national-id runs and phone-like numbers.

    Applied to a fixpoint so the result is idempotent: ``redact(redact(t)[0])``
    returns the same text with a count of zero.
    """
    total = 0
    while True:
        text, n = _redact_once(text)
        if n == 0:
            return text, total
        total += n


# ---------------------------------------------------------------------------
# Data model
# ---------------------------------------------------------------------------

CHUNK_FIELDS = (
    "id",
    "doc_id",
    "kind",
    "title",
    "text",
    "source",
    "timestamp",
    "credibility",
    "redaction_count",
)


@dataclass(frozen=True)
class DocumentChunk:
    id: str
    doc_id: str
    kind: SourceKind
    title: str
    text: str
    source: str
    timestamp: int
    credibility: float
    redaction_count: int = 0

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise EmptyText(f"chunk {self.id} has empty text")
        if not (0.0 <= self.credibility <= 1.0) or math.isnan(self.credibility):
            raise FormatViolation(f"chunk {self.id}: credibility {self.credibility} outside [0, 1]")
        if self.redaction_count < 0:
            raise FormatViolation(f"chunk {self.id}: negative redaction_count")

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["kind"] = self.kind.value
        return {k: d[k] for k in CHUNK_FIELDS}

    @property
    def tokens(self) -> list[str]:
        return self.text.split()


@dataclass
class Corpus:
    chunks: list[DocumentChunk] = field(default_factory=list)
    version: int = 0

    def __post_init__(self) -> None:
        self._by_id: dict[str, DocumentChunk] = {}
        for chunk in self.chunks:
            if chunk.id in self._by_id:
                raise FormatViolation(f"duplicate chunk id: {chunk.id}")
            self._by_id[chunk.id] = chunk

    def add(self, chunk: DocumentChunk) -> None:
        if chunk.id in self._by_id:
            raise FormatViolation(f"duplicate chunk id: {chunk.id}")
        self.chunks.append(chunk)
        self._by_id[chunk.id] = chunk
        self.version += 1

    def get(self, chunk_id: str) -> DocumentChunk:
        return self._by_id[chunk_id]

    def __contains__(self, chunk_id: object) -> bool:
        return chunk_id in self._by_id

    def __len__(self) -> int:
        return len(self.chunks)

    def __iter__(self) -> Iterator[DocumentChunk]:
        return iter(self.chunks)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Corpus):
            return NotImplemented
        return self.version == other.version and self.chunks == other.chunks

    def ids(self) -> list[str]:
        return [c.id for c in self.chunks]

    def by_doc(self, doc_id: str) -> list[DocumentChunk]:
        return [c for c in self.chunks if c.doc_id == doc_id]

    def of_kind(self, *kinds: SourceKind) -> list[DocumentChunk]:
        return [c for c in self.chunks if c.kind in kinds]


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------


def parse_timestamp(value: Any) -> int:
    if value is None or value == "":
        return 0
    if isinstance(value, bool):
        raise FormatViolation(f"invalid timestamp: {value!r}")
    if isinstance(value, (int, float)):
        return int(value)
    if isinstance(value, str):
        try:
            return int(float(value))
        except ValueError:
            pass
        try:
            dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
        except ValueError:
            raise FormatViolation(f"invalid timestamp: {value!r}") from None
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return int(dt.timestamp())
    raise FormatViolation(f"invalid timestamp: {value!r}")


def chunk_windows(n_tokens: int, size: int = CHUNK_SIZE, overlap: int = CHUNK_OVERLAP) -> list[tuple[int, int]]:
    """Token windows ``[start, end)`` covering ``n_tokens`` with the given overlap."""
    if size <= overlap:
        raise ValueError("chunk size must exceed overlap")
    if n_tokens <= 0:
        return []
    step = size - overlap
    windows = []
    start = 0
    while True:
        end = min(start + size, n_tokens)
        windows.append((start, end))
        if end >= n_tokens:
            return windows
        start += step


def ingest(
    raw_records: Iterable[Mapping[str, Any]],
    chunk_size: int = CHUNK_SIZE,
    overlap: int = CHUNK_OVERLAP,
) -> Corpus:
    """Redact, chunk and assign ids to raw document records.

    A record is a mapping with ``kind`` and ``text`` plus optional ``doc_id``,
    ``title``, ``source``, ``timestamp`` (UTC seconds or ISO-8601) and
    ``credibility``. Chunk ids are ``<doc_id>#<n>``.
    """
    corpus = Corpus()
    per_doc: dict[str, int] = {}
    for i, record in enumerate(raw_records):
        kind = SourceKind.parse(record.get("kind"))
        text = record.get("text")
        if not isinstance(text, str):
            raise EmptyText("record text missing", index=i)
        redacted, _ = redact(text)
        if not redacted.replace(REDACTION_MARKER, "").strip():
            raise EmptyText("record text empty after redaction", index=i)
        doc_id = str(record.get("doc_id") or f"DOC-{i:05d}")
        title = str(record.get("title") or doc_id)
        source = str(record.get("source") or "")
        timestamp = parse_timestamp(record.get("timestamp"))
        cred = record.get("credibility")
        credibility = DEFAULT_CREDIBILITY[kind] if cred is None else float(cred)

        tokens = redacted.split()
        for start, end in chunk_windows(len(tokens), chunk_size, overlap):
            n = per_doc.get(doc_id, 0)
            per_doc[doc_id] = n + 1
            body = " ".join(tokens[start:end])
            corpus.add(
                DocumentChunk(
                    id=f"{doc_id}#{n}",
                    doc_id=doc_id,
                    kind=kind,
                    title=title,
                    text=body,
                    source=source,
                    timestamp=timestamp,
                    credibility=credibility,
                    redaction_count=body.count(REDACTION_MARKER),
                )
            )
    return corpus


def read_raw_records(path: str | Path) -> list[dict[str, Any]]:
    """Read raw records from a JSON-lines file or a JSON array file."""
    try:
        content = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    stripped = content.lstrip()
    try:
        if stripped.startswith("["):
            records = json.loads(stripped)
        else:
            records = [json.loads(line) for line in content.splitlines() if line.strip()]
    except json.JSONDecodeError as exc:
        raise FormatViolation(f"{path}: invalid JSON: {exc}") from exc
    if not all(isinstance(r, dict) for r in records):
        raise FormatViolation(f"{path}: every record must be a JSON object")
    return records


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def chunk_from_dict(data: Mapping[str, Any], where: str = "") -> DocumentChunk:
    if set(data) != set(CHUNK_FIELDS):
        extra = sorted(set(data) - set(CHUNK_FIELDS))
        missing = sorted(set(CHUNK_FIELDS) - set(data))
        raise FormatViolation(f"{where}fields mismatch (unknown={extra}, missing={missing})")
    for name in ("id", "doc_id", "title", "text", "source"):
        if not isinstance(data[name], str):
            raise FormatViolation(f"{where}field {name!r} must be a string")
    if not isinstance(data["timestamp"], int) or isinstance(data["timestamp"], bool):
        raise FormatViolation(f"{where}field 'timestamp' must be an integer")
    if not isinstance(data["redaction_count"], int) or isinstance(data["redaction_count"], bool):
        raise FormatViolation(f"{where}field 'redaction_count' must be an integer")
    if not isinstance(data["credibility"], (int, float)) or isinstance(data["credibility"], bool):
        raise FormatViolation(f"{where}field 'credibility' must be a number")
    try:
        kind = SourceKind.parse(data["kind"])
    except UnknownKind as exc:
        raise FormatViolation(f"{where}{exc}") from exc
    try:
        return DocumentChunk(
            id=data["id"],
            doc_id=data["doc_id"],
            kind=kind,
            title=data["title"],
            text=data["text"],
            source=data["source"],
            timestamp=data["timestamp"],
            credibility=float(data["credibility"]),
            redaction_count=data["redaction_count"],
        )
    except EmptyText as exc:
        raise FormatViolation(f"{where}{exc}") from exc


def dump_corpus(corpus: Corpus) -> str:
    return "".join(json.dumps(c.to_dict(), ensure_ascii=False) + "\n" for c in corpus)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    try:
        Path(path).write_text(dump_corpus(corpus), encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_corpus(path: str | Path) -> Corpus:
    try:
        content = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    corpus = Corpus()
    for lineno, line in enumerate(content.splitlines(), start=1):
        if not line.strip():
            continue
        where = f"{path}:{lineno}: "
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatViolation(f"{where}malformed line: {exc}") from exc
        if not isinstance(data, dict):
            raise FormatViolation(f"{where}expected a JSON object")
        corpus.add(chunk_from_dict(data, where))
    return corpus
