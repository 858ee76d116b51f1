"""Exception types shared across the toolkit.

Everything user-input related derives from ValidationError so callers
(and the CLI exit-code mapping) can catch one family.
"""


class ToolkitError(Exception):
    """Base class for all toolkit-raised errors."""


class ValidationError(ToolkitError, ValueError):
    """Invalid data, parameters, or state supplied by the caller."""


class EmptyInputError(ValidationError):
    """An instance, corpus, or record that must be non-empty is empty."""


class AlignmentError(ValidationError):
    """Two records that must describe the same instance do not line up."""


class NotApplicableError(ValidationError):
    """The operation is undefined for this input (too short, too few sentences)."""


class CapabilityError(ValidationError):
    """The record lacks data the metric needs (e.g. no stored top-k)."""


class ProtocolError(ValidationError):
    """The seen/unseen sampling protocol cannot be satisfied."""


class ParseError(ValidationError):
    """A serialized file failed to parse.

    Carries the 1-based line number when the source is line-oriented.
    """

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class FormatError(ValidationError):
    """A persisted artifact has the wrong magic, version, or layout."""
