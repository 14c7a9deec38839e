"""Exception hierarchy.

The CLI maps these onto exit codes: ``PreconditionError`` (and subclasses)
to 2, ``NonConvergenceError`` to 3 and ``CapacityError`` to 4.
"""


class LpEmbedError(Exception):
    """Base class for all package errors."""


class PreconditionError(LpEmbedError, ValueError):
    """An input violates the documented precondition of an operation."""


class DimensionError(PreconditionError):
    pass


class DegenerateInputError(PreconditionError):
    """Input lies on a tie set or is otherwise degenerate."""

    def __init__(self, message, triple=None):
        super().__init__(message)
        self.triple = triple


class LinearDependenceError(PreconditionError):
    pass


class NonConvergenceError(LpEmbedError):
    """A solver gave up. ``best`` carries the best state reached, if any."""

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class FoldingFailureError(NonConvergenceError):
    pass


class CapacityError(LpEmbedError):
    """The perturbation radius is too small for the oracle's distortion."""

    def __init__(self, message, required=None, available=None):
        super().__init__(message)
        self.required = required
        self.available = available
