"""Exception hierarchy shared across the package.

DomainError covers semantic precondition violations (bad weights, mismatched
indices, out-of-range arguments).  FormatError covers structurally malformed
input (bad JSON shapes, ragged tables, unparseable rationals) and is kept
distinct so callers can tell "file is broken" from "file describes a bad
object".  ParseError carries a position for formula text.
"""


class MeanLogicError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MeanLogicError, ValueError):
    """A well-formed input violates a semantic precondition."""


class FormatError(MeanLogicError, ValueError):
    """Input is structurally malformed (shape, type, or syntax of a file)."""


class ParseError(FormatError):
    """Formula text failed to parse; carries the offending position."""

    def __init__(self, message, position=None):
        if position is not None:
            message = "%s (at position %d)" % (message, position)
        super().__init__(message)
        self.position = position


class EvalError(DomainError):
    """Formula evaluation hit an unassigned variable or unknown symbol."""


class NotLinearError(DomainError):
    """The operation requires a p-linear formula and got something else."""


class CapExceededError(DomainError):
    """A mean construction would exceed the raw-tuple cap."""
