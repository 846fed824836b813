"""Exception hierarchy shared by every spmdgrid module.

I/O problems are reported with the builtin :class:`OSError` family so that
callers can tell a missing file apart from a malformed one.
"""


class SpmdError(Exception):
    """Base class for all spmdgrid errors."""


# -- expressions -------------------------------------------------------------

class ExpressionError(SpmdError, ValueError):
    """An expression could not be turned into an AST."""

    def __init__(self, message, position=None, source=None):
        super().__init__(message)
        self.message = message
        self.position = position
        self.source = source

    def __str__(self):
        if self.position is None:
            return self.message
        return f"{self.message} at position {self.position}"

    def diagnostic(self):
        """Multi-line message with a caret under the offending offset."""
        if self.source is None or self.position is None:
            return str(self)
        return f"{self}\n  {self.source}\n  {' ' * self.position}^"


class ParseError(ExpressionError):
    pass


class UnknownFunction(ExpressionError):
    pass


class UnknownVariable(ExpressionError):
    pass


# -- grid --------------------------------------------------------------------

class GridError(SpmdError, ValueError):
    """Grid extent/step rejected (non-positive or not on the step grid)."""


class InvalidPartitioning(SpmdError, ValueError):
    pass


class IndexOutOfRange(SpmdError, IndexError):
    pass


# -- protocol ----------------------------------------------------------------

class MalformedSpec(SpmdError, ValueError):
    pass


class MalformedResult(SpmdError, ValueError):
    pass


# -- master ------------------------------------------------------------------

class ConfigError(SpmdError, ValueError):
    pass


class EmptyNodeList(ConfigError):
    pass


class SpawnError(SpmdError):
    pass


class TimeoutExpired(SpmdError):
    def __init__(self, pending, timeout):
        self.pending = tuple(pending)
        self.timeout = timeout
        super().__init__(
            f"timeout after {timeout:g} s; ranks still locked: "
            + ", ".join(str(r) for r in self.pending))


class WorkerFailed(SpmdError):
    def __init__(self, failures):
        self.failures = tuple(failures)
        lines = [f"rank {rank}: {msg}" for rank, msg in self.failures]
        super().__init__("worker failure(s):\n  " + "\n  ".join(lines))

    @property
    def ranks(self):
        return tuple(rank for rank, _ in self.failures)


class CountMismatch(SpmdError):
    pass


class EmptyResults(SpmdError, ValueError):
    pass


# -- bench -------------------------------------------------------------------

class NonPositiveTime(SpmdError, ValueError):
    pass


class RowNotFound(SpmdError, KeyError):
    pass
