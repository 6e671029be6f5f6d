"""Exception types shared across the package."""

from __future__ import annotations


class InvalidArgument(ValueError):
    """A parameter violates an operation's precondition."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class BudgetExceeded(RuntimeError):
    """The requested size exceeds a configured computational budget."""


class NeedsMoreDisorder(RuntimeError):
    """A disorder stream ran out before a stopping time was reached."""

    def __init__(self, message: str, consumed: int):
        super().__init__(message)
        self.consumed = consumed


class EstimationFailed(RuntimeError):
    """An experiment could not produce an estimate (e.g. bracket failure)."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def require_even(name: str, value: int, minimum: int = 0) -> int:
    if int(value) != value or value % 2 or value < minimum:
        raise InvalidArgument(f"{name} must be an even integer >= {minimum}, got {value!r}", field=name)
    return int(value)
