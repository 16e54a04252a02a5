"""The logistic map near its superstable fixed point at infinity.

With y = 1/x the map x -> a x (1 - x) becomes y -> y^2 / (a (y - 1)), and
orbits near y = 0 are y_n = F(zeta^(2^n)) where F solves

    F(z^2) = F(z)^2 / (a (F(z) - 1)),    F(0) = 0,  F'(0) = -a.

Two independent constructions of F's Taylor series are provided:

* ``matching``: the coefficient of z^(n+1) in a F(z^2)(F(z) - 1) - F(z)^2
  is linear in c_n with slope 2a, which gives c_n from c_1..c_{n-1};
* ``contraction``: iterate h <- N(h) for the correction h = F + a z, where
  N comes from solving the quadratic for F(z) in terms of F(z^2).  Each
  sweep fixes at least twice as many coefficients as the previous one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import series as ps
from ..conjugation import scaled_residual
from ..errors import ConvergenceError, NumericalError, PreconditionError
from ..series import TruncatedPowerSeries

CONTRACTION_TOL = 1e-14
CONTRACTION_CAP = 200
EXACT_TOL = 1e-12


class PoleError(NumericalError):
    """Iteration hit the pole of y -> y^2/(a(y-1)) at y = 1."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


def iterate_logistic(a: complex, x0: complex, n: int, variable: str = "x") -> np.ndarray:
    """Orbit of length n+1 of x -> a x (1-x) or of its y = 1/x form."""
    a, v = complex(a), complex(x0)
    if variable not in ("x", "y"):
        raise PreconditionError("variable must be 'x' or 'y'")
    if n < 0:
        raise PreconditionError("n must be >= 0")
    out = np.empty(n + 1, dtype=np.complex128)
    out[0] = v
    for i in range(n):
        if variable == "x":
            v = a * v * (1 - v)
        else:
            if v == 1 or a == 0:
                raise PoleError(f"y_{i} = 1 is the pole of the y-map", i)
            v = v * v / (a * (v - 1))
        out[i + 1] = v
    return out


def leading_order_solution(a: complex, y0: complex, n: int) -> complex:
    """Exact solution of y_{n+1} = -y_n^2 / a, i.e. -a (-y0/a)^(2^n).

    For n >= 1 this equals -y0^(2^n) a^(1 - 2^n).
    """
    a, y0 = complex(a), complex(y0)
    if a == 0:
        raise PreconditionError("a must be nonzero")
    if n < 0:
        raise PreconditionError("n must be >= 0")
    u = -y0 / a
    if u == 0:
        return 0j
    if math.ldexp(math.log(abs(u)), n) > 700:
        raise NumericalError(f"(-y0/a)^(2^{n}) overflows")
    for _ in range(n):
        u = u * u
    return -a * u


@dataclass(frozen=True)
class SuperstableSeries:
    """Taylor series of F about 0 together with h = F + a z."""

    a: complex
    f: TruncatedPowerSeries
    h: TruncatedPowerSeries
    residual_norm: float
    radius_estimate: float
    method: str
    iterations: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def order(self) -> int:
        return self.f.trunc_order

    @property
    def q(self) -> TruncatedPowerSeries:
        """Q = F^{-1} as a series (the constant of motion up to scaling)."""
        if "q" not in self._cache:
            self._cache["q"] = ps.reversion(self.f)
        return self._cache["q"]

    @property
    def q_radius(self) -> float:
        if "q_radius" not in self._cache:
            self._cache["q_radius"] = _radius(self.q)
        return self._cache["q_radius"]

    def safe_radius(self) -> float:
        """Disk on which F's truncated series is evaluated directly."""
        return min(0.8 * self.radius_estimate, ps.reliable_radius(self.f, 1e-14))

    def __call__(self, z):
        return ps.evaluate(self.f, z)


def _radius(s: TruncatedPowerSeries) -> float:
    try:
        return ps.estimate_radius(s, "cauchy_hadamard").radius
    except PreconditionError:
        return math.inf


def functional_residual(a: complex, f: TruncatedPowerSeries) -> float:
    """Scaled coefficient residual of a F(z^2)(F(z) - 1) - F(z)^2."""
    fz2 = ps.substitute_power(f, 2)
    res = (a * fz2 * (f - 1.0) - f * f).taylor()
    af = TruncatedPowerSeries(np.abs(f.taylor()))
    scale = (abs(a) * ps.substitute_power(af, 2) * (af + 1.0) + af * af).taylor().real
    return scaled_residual(res, scale)


def _match(a: complex, order: int) -> np.ndarray:
    c = np.zeros(order + 1, dtype=np.complex128)
    c[1] = -a
    for n in range(2, order + 1):
        m = n + 1
        # a [z^m] F(z^2) F(z): terms c_j c_i with 2j + i = m
        j = np.arange(1, (m - 1) // 2 + 1)
        i = m - 2 * j
        keep = i < n
        known = a * np.dot(c[j[keep]], c[i[keep]])
        if m % 2 == 0:
            known -= a * c[m // 2]
        # minus the F(z)^2 terms not involving c_1
        ii = np.arange(2, n)
        known -= np.dot(c[ii], c[m - ii])
        c[n] = -known / (2 * a)
    return c


def _contraction_step(a: complex, h: TruncatedPowerSeries) -> TruncatedPowerSeries:
    n = h.trunc_order
    z = TruncatedPowerSeries.variable(n + 2)
    hz2 = ps.substitute_power(h.with_order(n + 2), 2)
    shifted = hz2 - a * z * z
    radicand = 4 * a * a * z * z - 4 * a * hz2 + a * a * shifted * shifted
    # radicand = 4 a^2 z^2 (1 + ...): pull out the double zero so the root of
    # the remaining unit series is taken on the branch with value 1 at 0.
    unit = ps.shift_down(radicand, 2, tol=1e-12) / (4 * a * a)
    root = ps.shift_up(ps.sqrt_branch(unit, 1.0), 1) * (2 * a)
    new = a * z.with_order(n) + (a / 2) * shifted.with_order(n) - 0.5 * root.with_order(n)
    out = new.taylor()
    out[:2] = 0.0
    return TruncatedPowerSeries(out)


def solve_superstable(a: complex, order: int = ps.DEFAULT_ORDER,
                      method: str = "matching") -> SuperstableSeries:
    a = complex(a)
    if a == 0:
        raise PreconditionError("a = 0 has no superstable conjugation (F'(0) = -a = 0)")
    if order < 3:
        raise PreconditionError("order must be >= 3")
    iterations = 0
    if method == "matching":
        coeffs = _match(a, order)
    elif method == "contraction":
        h = TruncatedPowerSeries.zero(order)
        for iterations in range(1, CONTRACTION_CAP + 1):
            new = _contraction_step(a, h)
            diff = np.abs(new.taylor() - h.taylor())
            scale = np.maximum(np.abs(new.taylor()), 1.0)
            h = new
            if np.all(diff <= CONTRACTION_TOL * scale):
                break
        else:
            raise ConvergenceError(f"contraction did not settle in {CONTRACTION_CAP} sweeps")
        coeffs = h.taylor()
        coeffs[1] = -a
    else:
        raise PreconditionError(f"unknown method {method!r}")
    f = TruncatedPowerSeries(coeffs)
    hc = coeffs.copy()
    hc[1] = 0.0
    return SuperstableSeries(
        a=a, f=f, h=TruncatedPowerSeries(hc),
        residual_norm=functional_residual(a, f),
        radius_estimate=_radius(f),
        method=method, iterations=iterations,
    )


# -- explicit solutions -------------------------------------------------------

@dataclass(frozen=True)
class ExplicitSolution:
    """Closed form F(z) = numer(z) / denom(z) for the solvable values of a."""

    a: int
    numer: tuple
    denom: tuple
    formula: str

    def __call__(self, z):
        pv = np.polynomial.polynomial.polyval
        z = np.asarray(z, dtype=np.complex128)
        out = pv(z, np.array(self.numer, dtype=float)) / pv(z, np.array(self.denom, dtype=float))
        return complex(out) if out.ndim == 0 else out

    def taylor(self, order: int = ps.DEFAULT_ORDER) -> TruncatedPowerSeries:
        return ps.divide(ps.from_polynomial(self.numer, order),
                         ps.from_polynomial(self.denom, order))


_EXPLICIT = {
    -2: ((0, 2), (1, 1, 1), "F(z) = 2z/(z^2+z+1)"),
    2: ((0, 2), (-1, 1), "F(z) = 2z/(z-1)"),
    4: ((0, -4), (1, -2, 1), "F(z) = -4z/(z-1)^2"),
}


def is_exactly(a: complex, value: float, tol: float = EXACT_TOL) -> bool:
    return abs(complex(a) - value) <= tol


def explicit_solution(a: complex) -> ExplicitSolution:
    for key, (num, den, text) in _EXPLICIT.items():
        if is_exactly(a, key):
            return ExplicitSolution(key, num, den, text)
    raise PreconditionError(f"no closed form for a = {a}; expected one of -2, 2, 4")
