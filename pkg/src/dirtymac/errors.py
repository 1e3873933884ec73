"""Shared exception types."""


class ConfigError(ValueError):
    """Malformed configuration; ``pointer`` locates the offending field."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"config error at {pointer}: {message}")
        self.pointer = pointer


class InfeasibleRate(ValueError):
    """Rate target outside the region; ``constraint`` is the 1-based index
    of the tightest violated suffix constraint."""

    def __init__(self, constraint: int, message: str):
        super().__init__(message)
        self.constraint = constraint


class InvariantViolation(AssertionError):
    """A cross-checked identity failed.

    Raised when two formulas that must agree (e.g. matching inner/outer
    bounds, or a certified gap bound) disagree.  This is never a legal
    outcome for valid inputs; it signals an implementation bug and maps to
    a distinct CLI exit code so sweeps can be scripted as falsification
    harnesses.
    """
