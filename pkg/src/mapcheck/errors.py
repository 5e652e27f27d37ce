"""Exception types shared across the package."""


class MapcheckError(Exception):
    """Base class for all errors raised by mapcheck."""


class ContractError(MapcheckError, ValueError):
    """A caller broke an operation's precondition (bad id, length mismatch)."""


class ResourceLimitError(MapcheckError):
    """A configured capacity (vertex count, oracle size, state cap) was exceeded."""

    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = stats


class GraphFormatError(MapcheckError):
    """Malformed explicit-graph text."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
