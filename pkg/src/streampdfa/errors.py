"""Exception hierarchy shared by the whole package.

The CLI maps these onto process exit codes: UsageError -> 2,
InputDataError -> 3, InvariantViolation -> 4.
"""


class StreamPdfaError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(StreamPdfaError):
    """A caller violated an API precondition (bad flag value, wrong mode,
    operation on a frozen model, and so on)."""


class UndefinedDistributionError(UsageError):
    """A probability was requested from a state with zero mass."""


class InputDataError(StreamPdfaError):
    """Input data is malformed or out of range."""


class ParseError(InputDataError):
    """Malformed text input; carries a 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class InvariantViolation(StreamPdfaError):
    """An internal invariant broke: counter overflow, negative counts after
    subtraction, out-of-order undo. Always a bug or corrupted state, never
    a user mistake."""
