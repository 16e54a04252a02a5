"""Analytic embedding of one-dimensional recurrences and their singularity structure.

Subpackages and modules:

* :mod:`imsp.series`: truncated complex power series;
* :mod:`imsp.conjugation`: Poincare conjugation maps, transseries embedding,
  Riccati closed form, nonresonance search;
* :mod:`imsp.logistic`: the logistic map at its superstable point at infinity;
* :mod:`imsp.dynamics`: Fatou component, Julia boundary, barrier probe;
* :mod:`imsp.cli`: the ``imsp`` command.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BranchCollisionError,
    BranchPointError,
    CenterMismatchError,
    ConvergenceError,
    DomainError,
    ImspError,
    NotInvertibleError,
    NumericalError,
    PreconditionError,
    SeriesOverflowError,
)
from .series import TruncatedPowerSeries  # noqa: E402
