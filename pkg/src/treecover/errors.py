"""Exception types shared across the package."""


class StateError(RuntimeError):
    """An operation needs data the object does not carry (e.g. an untracked depth)."""


class NumericError(ArithmeticError):
    """A numerical procedure failed (singular system, degenerate sample)."""
