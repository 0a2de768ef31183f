"""Shared exception types.

DomainError marks inputs outside an operation's contract (the CLI maps it to
exit code 2); ToleranceError marks a numerical budget or tolerance that could
not be met (exit code 3).
"""


class DomainError(ValueError):
    pass


class PoleError(DomainError):
    """Evaluation point within the pole radius of a mass center."""


class ToleranceError(RuntimeError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        # best value computed before the budget ran out, if any
        self.partial = partial
