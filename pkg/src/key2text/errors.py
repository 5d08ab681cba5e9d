"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class Key2TextError(Exception):
    """Base class for all toolkit errors."""


class ParseError(Key2TextError):
    """A corpus or pair file line could not be parsed."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class EmbeddingError(Key2TextError):
    """An embedding provider returned unusable output."""


class SubwordStructureError(EmbeddingError):
    """Token stream starts with a continuation piece."""


class DimensionMismatchError(EmbeddingError):
    """Vectors of different dimensions were mixed."""


class ZeroVectorError(EmbeddingError):
    """A vector with zero norm cannot be cosine-scored."""


class ExtractionError(Key2TextError):
    """Keyword extraction failed for one document."""

    def __init__(self, message: str, document_id: str | None = None):
        self.document_id = document_id
        if document_id is not None:
            message = f"document {document_id!r}: {message}"
        super().__init__(message)


class EvaluationError(Key2TextError):
    """Evaluation inputs are malformed or misaligned."""


class DecodingError(Key2TextError):
    """Text generation could not proceed."""


class ConstraintUnsatisfiable(DecodingError):
    """No hypothesis could include every forced keyword."""

    def __init__(self, missing_keywords: tuple[str, ...]):
        self.missing_keywords = tuple(missing_keywords)
        super().__init__(
            "constraints unsatisfiable, missing keywords: "
            + ", ".join(self.missing_keywords)
        )


class GatewayError(Key2TextError):
    """A remote model call failed after exhausting retries."""

    def __init__(self, message: str, attempts: int = 1):
        self.attempts = attempts
        super().__init__(f"{message} (after {attempts} attempt(s))")


class ProtocolError(GatewayError):
    """The remote server violated the wire contract."""


class GatewayClientError(GatewayError):
    """The server rejected the request as invalid (4xx)."""

    def __init__(self, message: str, status: int):
        self.status = status
        super().__init__(f"HTTP {status}: {message}")


class ConfigError(Key2TextError):
    """A run configuration is invalid or contains unknown keys."""
