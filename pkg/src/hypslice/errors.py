class UsageError(ValueError):
    """Invalid arguments or a violated precondition."""


class NumericError(RuntimeError):
    """A numerical routine failed to produce a usable result."""
