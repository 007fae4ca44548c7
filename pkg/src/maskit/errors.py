"""Exception types shared across the runtime; the HTTP layer maps them to
status codes."""
from __future__ import annotations


class MasError(Exception):
    """Base class for runtime errors with a user-facing message."""


class NotFoundError(MasError):
    pass


class ConflictError(MasError):
    pass


class InvalidSpecError(MasError):
    pass


class PreconditionError(MasError):
    pass


class UnsupportedPerformativeError(MasError):
    pass


class OpFailure(MasError):
    """An artifact operation found no applicable rewrite rule."""


class EvalError(MasError):
    """Arithmetic or relational evaluation failed (unbound variable,
    non-numeric leaf, division by zero)."""
