"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes (see cli.py), so new error
conditions should reuse one of these classes rather than raising bare
exceptions.
"""


class BwbError(Exception):
    """Base class for all package-specific errors."""


class DomainError(BwbError, ValueError):
    """An input value is outside the operation's mathematical domain."""


class ShapeError(BwbError, ValueError):
    """Array arguments have inconsistent lengths or dimensions."""


class FormatError(BwbError):
    """A file does not conform to the expected on-disk format."""


class ParseError(FormatError):
    """Malformed text input; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StateError(BwbError):
    """An operation was called before its required state existed."""


class TrainingError(BwbError):
    """Training failed; ``last_good`` holds the last finite checkpoint, if any."""

    def __init__(self, message: str, last_good=None):
        super().__init__(message)
        self.last_good = last_good
