"""Exception types shared across the toolkit.

Everything raised on purpose derives from CogpathError so callers (and the
CLI exit-code mapping) can distinguish data problems from backend outages.
"""

from __future__ import annotations


class CogpathError(Exception):
    """Base class for all toolkit errors."""


class UnknownCategory(CogpathError):
    """A category id or surface string does not resolve against the scheme."""


class LabelError(CogpathError):
    """A stored label violates the category hierarchy."""


class ParseError(CogpathError):
    """A corpus or config file could not be parsed."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class EmptyCorpus(CogpathError):
    """An operation that needs at least one post received none."""


class EmptyInput(CogpathError):
    """An aggregate metric was asked to average zero items."""


class ContractViolation(CogpathError):
    """Caller broke a precondition (usually a length/alignment contract)."""


class BackendUnavailable(CogpathError):
    """A remote backend could not be reached after the retry budget."""

    def __init__(self, message: str, stage: str | None = None):
        if stage:
            message = f"[{stage}] {message}"
        super().__init__(message)
        self.stage = stage


class ProtocolError(CogpathError):
    """A remote backend answered, but not in the agreed wire format."""


class InvalidPrediction(CogpathError):
    """A backend produced a label that cannot be normalized into the scheme."""

    def __init__(self, message: str, index: int | None = None):
        if index is not None:
            message = f"sentence {index}: {message}"
        super().__init__(message)
        self.index = index


class MalformedReply(CogpathError):
    """An LLM reply failed the structured-output schema."""


class SummarizationFailed(CogpathError):
    """Every per-category summarization call failed for a post."""
