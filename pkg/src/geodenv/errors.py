"""Exception types shared across the package.

The CLI maps these onto exit codes: parameter/usage problems exit with 2,
capacity and truncation problems exit with 3.
"""


class ParameterError(ValueError):
    """An argument is outside its documented domain."""


class BoundsError(IndexError):
    """A vertex or site falls outside the declared window."""


class CapacityError(RuntimeError):
    """A requested allocation exceeds the configured memory budget."""


class TruncationError(RuntimeError):
    """A walk or simulation ran out of room before finishing.

    Carries enough context for the caller to retry with a larger window.
    """

    def __init__(self, message, *, needed=None, available=None):
        super().__init__(message)
        self.needed = needed
        self.available = available


class InvariantViolation(RuntimeError):
    """A cross-check between two independent code paths failed."""
