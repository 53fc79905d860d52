"""Exception types shared across the solvers."""


class SolverError(RuntimeError):
    """A solve run hit a non-finite objective or another fatal state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class StagnationError(SolverError):
    """Backtracking underflowed; the run cannot make further progress."""


class RefusalError(ValueError):
    """An exhaustive diagnostic was asked for an instance that is too large."""
