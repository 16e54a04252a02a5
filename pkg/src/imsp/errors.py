"""Exception hierarchy shared by every module.

Precondition failures derive from ``ValueError`` so argument validation in
callers can catch them generically; numerical failures derive from
``ArithmeticError``.  The CLI maps the two families to different exit codes.
"""


class ImspError(Exception):
    """Base class for all errors raised by this package."""


class PreconditionError(ImspError, ValueError):
    """An input violates a documented precondition."""


class CenterMismatchError(PreconditionError):
    """Two series expanded about different centers were combined."""


class BranchPointError(PreconditionError):
    """Square root requested of a series whose constant term vanishes."""


class NotInvertibleError(PreconditionError):
    """Series reversion requested for a series with vanishing linear term."""


class DomainError(PreconditionError):
    """Evaluation point lies outside the region where a series is reliable."""


class NumericalError(ImspError, ArithmeticError):
    """A computation failed numerically (overflow, non-convergence)."""


class SeriesOverflowError(NumericalError):
    """Evaluation produced a non-finite value."""


class ConvergenceError(NumericalError):
    """An iterative procedure did not converge within its budget."""


class BranchCollisionError(NumericalError):
    """Analytic continuation ran into a square-root branch point.

    ``point`` is the path point at which the radicand (nearly) vanished.
    """

    def __init__(self, message: str, point: complex):
        super().__init__(message)
        self.point = point
