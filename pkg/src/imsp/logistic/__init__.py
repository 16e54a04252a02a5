"""Superstable-point analysis of the logistic map x -> a x (1 - x)."""

from .analysis import (
    ImspVerdict,
    RationalIterate,
    Z1Analysis,
    analyze_z1,
    build_rational_iterate,
    classify_imsp,
    iterate_identity_residual,
    q_functional_residual,
    superstable_orbit,
)
from .continuation import (
    BranchPointCertificate,
    ContinuedValue,
    continue_along,
    continue_F,
    continued_values,
    doubling_gap,
    find_branch_point,
    locate_branch_point,
    monodromy_gap,
)
from .superstable import (
    ExplicitSolution,
    PoleError,
    SuperstableSeries,
    explicit_solution,
    functional_residual,
    iterate_logistic,
    leading_order_solution,
    solve_superstable,
)
