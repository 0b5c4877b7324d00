"""Exception types raised across the package, grouped by pipeline stage."""

from __future__ import annotations


class GradebenchError(Exception):
    """Base class for all errors raised by this package."""


# --- dataset ingestion ---

class MalformedRow(GradebenchError):
    """A TSV row has the wrong shape or an unparseable/invalid field."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class DanglingReference(GradebenchError):
    """An answer references a question id that does not exist."""

    def __init__(self, question_id: str):
        self.question_id = question_id
        super().__init__(f"answer references unknown question id {question_id!r}")


class EncodingError(GradebenchError):
    """Input bytes are not valid UTF-8."""


class OutOfRange(GradebenchError):
    """A grade lies outside its declared range."""


class EmptyDataset(GradebenchError):
    """An operation requires a non-empty dataset."""


# --- embedding providers ---

class DimensionMismatch(GradebenchError):
    """A vector-file row has a different dimension than the first row."""

    def __init__(self, line: int):
        self.line = line
        super().__init__(f"line {line}: vector dimension differs from first row")


class MalformedVector(GradebenchError):
    """A vector-file row is not `word` followed by decimal floats."""

    def __init__(self, line: int, reason: str = "malformed vector row"):
        self.line = line
        super().__init__(f"line {line}: {reason}")


class EmptyFile(GradebenchError):
    """The vector file contains no entries."""


class AllTokensOOV(GradebenchError):
    """Every token of an answer was out of vocabulary and skipped."""


class ProviderFailure(GradebenchError):
    """An embedding provider failed (transport, protocol, or backend)."""


class ServiceUnavailable(ProviderFailure):
    """The remote embedding service could not be reached."""


class UnknownModel(ProviderFailure):
    """The remote service does not serve the requested model."""

    def __init__(self, model: str, available: list[str] | None = None):
        self.model = model
        self.available = list(available or [])
        msg = f"unknown model {model!r}"
        if self.available:
            msg += f" (service offers: {', '.join(self.available)})"
        super().__init__(msg)


class ShapeMismatch(ProviderFailure):
    """The remote response shape does not match the request shape."""


# --- feature extraction ---

class EmptyAnswer(GradebenchError):
    """No word vectors survived for this answer, so no sentence vector exists."""


class ZeroVector(GradebenchError):
    """Cosine similarity is undefined for an (effectively) all-zero vector."""


class EmptyInput(GradebenchError):
    """An operation received an empty sequence it cannot handle."""


# --- regression ---

class NonPositiveWeight(GradebenchError):
    """Isotonic fitting requires strictly positive weights."""


class DegenerateDesign(GradebenchError):
    """Unpenalized linear fit is undefined when x carries no variance."""


# --- evaluation ---

class LengthMismatch(GradebenchError):
    """Paired metric inputs differ in length."""


class ConstantInput(GradebenchError):
    """Pearson correlation is undefined when either side is constant."""


class TooFewRows(GradebenchError):
    """Not enough feature rows to form the requested train/test splits."""
