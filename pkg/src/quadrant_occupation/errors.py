"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class PreconditionError(ValueError):
    """Inputs are valid numbers but violate an operation's stated precondition."""


class ConvergenceError(RuntimeError):
    """A numerical procedure failed to reach its tolerance.

    ``best`` carries the best available estimate and ``history`` the sequence
    of refinements (or residuals) that was observed.
    """

    def __init__(self, message, best=None, history=()):
        super().__init__(message)
        self.best = best
        self.history = tuple(history)


class IllConditionedError(RuntimeError):
    """A least-squares system is rank deficient for the requested regularization."""
