"""Exception types shared across the library."""


class TinycoreError(Exception):
    """Base class for all library errors."""


class InvalidInput(TinycoreError, ValueError):
    """Input data violates a precondition (non-finite, negative weight, ...)."""


class InvalidArgument(TinycoreError, ValueError):
    """A parameter is out of its valid range."""


class ResourceLimit(TinycoreError, RuntimeError):
    """The request would exceed a hard resource guard."""


class EmptyState(TinycoreError, RuntimeError):
    """An operation was queried before any data was supplied."""
