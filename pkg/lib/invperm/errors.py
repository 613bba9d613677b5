class InvpermError(Exception):
    pass


class DomainError(InvpermError, ValueError):
    """Arguments outside an operation's documented domain."""


class WindowRangeError(DomainError, IndexError):
    pass


class InvalidCodeError(DomainError):
    """An inversion sequence with some e_j >= j."""


class EmptyClassError(DomainError):
    """S_{n,m} (or another counted class) is empty, so no ratio exists."""


class BudgetExceededError(InvpermError, RuntimeError):
    def __init__(self, message: str, limit: int):
        super().__init__(message, limit)
        self.limit = limit

    def __str__(self):
        return f"{self.args[0]} (limit: {self.limit} cells)"


class TrialsExhaustedError(InvpermError, RuntimeError):
    """Rejection sampling ran out of trials; safe to retry with a larger budget."""

    def __init__(self, message: str, trials: int):
        # pickling rebuilds the error from args
        super().__init__(message, trials)
        self.trials = trials

    def __str__(self):
        return f"{self.args[0]} after {self.trials} trials"
