"""Exception hierarchy shared across the engine.

Every error raised on purpose derives from :class:`QeragError`; the CLI maps
the two broad families (:class:`FormatError` and :class:`ValidationFailed`)
onto distinct exit codes.
"""

from __future__ import annotations


class QeragError(Exception):
    """Base class for all engine errors."""


class FormatError(QeragError):
    """Input data or a persisted file is malformed or cannot be read."""


class IoFailure(FormatError):
    pass


class FormatViolation(FormatError):
    pass


class UnknownKind(FormatError):
    pass


class EmptyText(QeragError):
    def __init__(self, message: str = "text is empty", index: int | None = None):
        if index is not None:
            message = f"{message} (index {index})"
        super().__init__(message)
        self.index = index


class UnsupportedDim(QeragError):
    pass


class DimMismatch(QeragError):
    pass


class EmptyCorpus(QeragError):
    pass


class IndexMissing(FormatError):
    pass


class UnknownNode(QeragError):
    def __init__(self, node_id: str):
        super().__init__(f"unknown node: {node_id}")
        self.node_id = node_id


class EmptyGraph(QeragError):
    pass


class NonConvergence(QeragError):
    """PageRank did not reach tolerance; carries the last iterate."""

    def __init__(self, scores: dict[str, float], iterations: int, delta: float):
        super().__init__(
            f"pagerank did not converge after {iterations} iterations (delta={delta:.3e})"
        )
        self.scores = scores
        self.iterations = iterations
        self.delta = delta


class EmptyRequirements(QeragError):
    pass


class EmptyHistory(QeragError):
    pass


class GeneratorFailure(QeragError):
    def __init__(self, message: str, raw_output: str):
        super().__init__(message)
        self.raw_output = raw_output


class MissingTemplate(QeragError):
    pass


class TypeMismatch(QeragError):
    pass


class NoRequirements(QeragError):
    pass


class UnparsableArtifact(FormatError):
    pass


class ConfigError(QeragError):
    pass


class ValidationFailed(QeragError):
    """Raised by the CLI layer when a validation report does not pass."""


class UnknownChunk(QeragError):
    def __init__(self, chunk_id: str):
        super().__init__(f"unknown chunk: {chunk_id}")
        self.chunk_id = chunk_id
