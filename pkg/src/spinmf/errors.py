"""Exception taxonomy shared across the package.

Three failure classes map onto the CLI exit codes: bad inputs (1),
numerical aborts (2), and size-guard refusals (3).
"""


class ContractViolation(ValueError):
    """An argument broke a documented precondition (shape, range, value set)."""


class SizeGuardRefusal(ValueError):
    """An exhaustive computation was refused because the instance is too large.

    The message always names the limit so callers can tell a guard from a bug.
    """


class NumericalAbort(RuntimeError):
    """A numerical routine hit a non-finite value and stopped.

    Carries the iteration index at which the abort happened when applicable.
    """

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration
