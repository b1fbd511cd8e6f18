"""Exception types shared across the package."""


class BiHybError(Exception):
    """Base class for all package errors."""


class ContractError(BiHybError, ValueError):
    """An operation was called with arguments violating its preconditions."""


class CycleError(BiHybError, ValueError):
    """A graph that must be acyclic contains a directed cycle."""

    def __init__(self, edge, message=None):
        self.edge = tuple(edge)
        super().__init__(message or f"graph contains a cycle through edge {self.edge[0]}->{self.edge[1]}")


class InvalidActionError(BiHybError, ValueError):
    """An action is not legal in the current state."""


class EpisodeDoneError(BiHybError, RuntimeError):
    """The episode has already reached its final step."""


class ParseError(BiHybError, ValueError):
    """An instance document does not follow the expected schema."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class ValidationError(BiHybError, ValueError):
    """An instance parsed correctly but violates a semantic invariant."""
