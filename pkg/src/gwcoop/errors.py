class PreconditionError(ValueError):
    """An operation was called outside its documented domain."""


class BudgetExceeded(RuntimeError):
    """An exact computation outgrew its configured support or truncation budget.

    ``frontier`` records how far the computation got (a step index, or an
    ``(N, T)`` pair for certificate scans).
    """

    def __init__(self, message: str, frontier=None):
        super().__init__(message)
        self.frontier = frontier


class NoCrossing(PreconditionError):
    """No root of h(p, .) = 1 exists in [0, 1] for the requested p."""
