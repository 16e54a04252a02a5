"""Poincare linearization of x_{n+1} = a x_n + F(x_n) at an attracting fixed point.

The conjugation map phi (phi(0) = 0, phi'(0) = 1) satisfies

    phi(a z) = a phi(z) + F(phi(z)),

so every orbit near the origin is x_n = phi(C a^n).  Its Taylor coefficients
D_k = phi_k are also the coefficients of the one-parameter transseries

    x(z; C) = sum_k C^k D_k exp(z k log a),

which continues the orbit from integer n to complex z.  The inverse Q of phi
gives the constant of motion C = a^{-n} Q(x_n).

Q is computed from its own functional equation Q(G(x)) = a Q(x) rather than
by reverting phi: phi typically has a much smaller radius of convergence than
Q (for the logistic map at a = 0.5 about 0.2 against 1), which makes the
coefficient-space reversion exponentially ill-conditioned.
"""

from __future__ import annotations

import cmath
import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import series as ps
from .errors import DomainError, PreconditionError, SeriesOverflowError
from .series import TruncatedPowerSeries

SAFETY = 0.9
SMALL_DIVISOR_WARN = 1e-6


@dataclass(frozen=True)
class RecurrenceSpec:
    """G(x) = a x + sum_{k>=2} f_k x^k.

    ``nonlinearity[0]`` is f_2, so F(0) = F'(0) = 0 holds by construction.
    ``riccati_c`` records that the polynomial is the truncated expansion of
    the Mobius map a x / (1 + c x).
    """

    a: complex
    nonlinearity: tuple = ()
    riccati_c: complex | None = None

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "nonlinearity", tuple(complex(f) for f in self.nonlinearity))
        if self.a == 0:
            raise PreconditionError("multiplier a must be nonzero")

    @classmethod
    def logistic(cls, a: complex) -> "RecurrenceSpec":
        """x_{n+1} = a x_n (1 - x_n)."""
        return cls(a, (-complex(a),))

    @classmethod
    def riccati(cls, a: complex, c: complex, order: int) -> "RecurrenceSpec":
        """Expansion of a x / (1 + c x) through x**order."""
        a, c = complex(a), complex(c)
        coeffs = tuple(a * (-c) ** (k - 1) for k in range(2, order + 1))
        return cls(a, coeffs, riccati_c=c)

    def poly(self) -> np.ndarray:
        """Coefficients g_0..g_d of G (ascending)."""
        return np.array([0.0, self.a, *self.nonlinearity], dtype=np.complex128)

    def G(self, x):
        return np.polynomial.polynomial.polyval(x, self.poly())

    def F(self, x):
        c = self.poly()
        c[1] = 0.0
        return np.polynomial.polynomial.polyval(x, c)

    def series(self, order: int) -> TruncatedPowerSeries:
        return ps.from_polynomial(self.poly(), order)


@dataclass(frozen=True)
class PoincareMap:
    phi: TruncatedPowerSeries
    q: TruncatedPowerSeries
    a: complex
    defect_norm: float
    radius_estimate: float
    q_radius: float
    q_defect_norm: float
    inverse_defect: float
    min_small_divisor: float
    spec: RecurrenceSpec
    diagnostics: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return self.phi.trunc_order

    def phi_domain(self) -> float:
        """Radius inside which evaluating phi's truncated series is trusted."""
        return min(SAFETY * self.radius_estimate, ps.reliable_radius(self.phi))

    def q_domain(self) -> float:
        return min(SAFETY * self.q_radius, ps.reliable_radius(self.q))


def _radius(s: TruncatedPowerSeries) -> float:
    try:
        return ps.estimate_radius(s, "cauchy_hadamard").radius
    except PreconditionError:
        # polynomial / too sparse to extrapolate: no singularity visible
        return math.inf


def scaled_residual(residual: np.ndarray, scale: np.ndarray) -> float:
    """max_k |r_k| / s_k, skipping entries whose scale is exactly zero."""
    mask = scale > 0
    if not np.any(mask):
        return float(np.max(np.abs(residual))) if residual.size else 0.0
    out = np.abs(residual[mask]) / scale[mask]
    tail = np.abs(residual[~mask])
    return float(max(out.max(), tail.max() if tail.size else 0.0))


def composition_defect(outer: TruncatedPowerSeries, inner: TruncatedPowerSeries,
                       target: TruncatedPowerSeries) -> float:
    """Backward-style error of outer(inner) = target.

    Each coefficient of the residual is divided by the matching coefficient
    of |outer| o |inner|, the natural size of the rounding error in that slot.
    """
    res = (ps.compose(outer, inner) - target).taylor()
    absc = ps.compose(TruncatedPowerSeries(np.abs(outer.taylor())),
                      TruncatedPowerSeries(np.abs(inner.taylor()))).taylor()
    absc = np.maximum(absc.real, np.abs(target.taylor()[: absc.size]))
    return scaled_residual(res, absc)


def _phi_coefficients(a: complex, fs: Sequence[complex], order: int) -> tuple[np.ndarray, float]:
    # powers[m][k] = [z^k] phi^m, filled column by column (Miller-style): the
    # k-th column of phi^m for m >= 2 only involves phi_1..phi_{k-1}.
    deg = len(fs) + 1
    phi = np.zeros(order + 1, dtype=np.complex128)
    phi[1] = 1.0
    powers = np.zeros((deg + 1, order + 1), dtype=np.complex128)
    powers[1, 1] = 1.0
    for m in range(2, deg + 1):
        powers[m, m] = 1.0
    min_div = math.inf
    for k in range(2, order + 1):
        for m in range(2, min(deg, k) + 1):
            if k == m:
                continue
            # [z^k] phi^m = sum_{i=1}^{k-m+1} phi_i [z^{k-i}] phi^{m-1}
            i = np.arange(1, k - m + 2)
            powers[m, k] = np.dot(phi[i], powers[m - 1, k - i])
        rhs = sum(fs[m - 2] * powers[m, k] for m in range(2, min(deg, k) + 1))
        div = a ** k - a
        min_div = min(min_div, abs(div))
        phi[k] = rhs / div
        powers[1, k] = phi[k]
    return phi, min_div


def _q_coefficients(spec: RecurrenceSpec, order: int) -> np.ndarray:
    # Q(G(x)) = a Q(x):  q_k (a^k - a) = -sum_{j<k} q_j [x^k] G^j
    a = spec.a
    g = spec.series(order).taylor()
    gpow = np.zeros((order + 1, order + 1), dtype=np.complex128)
    gpow[1] = g
    for j in range(2, order + 1):
        gpow[j] = np.convolve(gpow[j - 1], g)[: order + 1]
    q = np.zeros(order + 1, dtype=np.complex128)
    q[1] = 1.0
    for k in range(2, order + 1):
        q[k] = np.dot(q[1:k], gpow[1:k, k]) / (a - a ** k)
    return q


def solve_poincare(spec: RecurrenceSpec, order: int = ps.DEFAULT_ORDER) -> PoincareMap:
    """Conjugation map phi and its inverse Q through ``order``.

    ``defect_norm`` is max_k |[z^k](phi(az) - a phi - F(phi))| / max_k |phi_k|.
    """
    a = spec.a
    if not 0 < abs(a) < 1:
        raise PreconditionError(f"the Poincare solver needs 0 < |a| < 1, got |a| = {abs(a):.6g}")
    if order < 2:
        raise PreconditionError("order must be >= 2")
    coeffs, min_div = _phi_coefficients(a, spec.nonlinearity, order)
    if min_div < SMALL_DIVISOR_WARN:
        warnings.warn(f"small divisor min|a^k - a| = {min_div:.3e}", RuntimeWarning, stacklevel=2)
    phi = TruncatedPowerSeries(coeffs)
    q = TruncatedPowerSeries(_q_coefficients(spec, order))

    fser = ps.from_polynomial([0, 0, *spec.nonlinearity], order)
    defect = (ps.dilate(phi, a) - a * phi - ps.compose(fser, phi)).taylor()
    phi_scale = float(np.max(np.abs(coeffs)))
    defect_norm = float(np.max(np.abs(defect))) / phi_scale

    gser = spec.series(order)
    qdef = (ps.compose(q, gser) - a * q).taylor()
    q_defect_norm = float(np.max(np.abs(qdef))) / float(np.max(np.abs(q.coeffs)))

    try:
        inverse_defect = composition_defect(q, phi, TruncatedPowerSeries.variable(order))
    except SeriesOverflowError:
        # phi's coefficients grow like radius^-k; at high order the
        # composition Q(phi) leaves double range even though both solves are fine
        inverse_defect = math.nan

    return PoincareMap(
        phi=phi, q=q, a=a,
        defect_norm=defect_norm,
        radius_estimate=_radius(phi),
        q_radius=_radius(q),
        q_defect_norm=q_defect_norm,
        inverse_defect=inverse_defect,
        min_small_divisor=float(min_div),
        spec=spec,
        diagnostics={"defect_abs": float(np.max(np.abs(defect))), "phi_scale": phi_scale},
    )


# -- transseries / analyzable embedding -----------------------------------

@dataclass(frozen=True)
class TransseriesSolution:
    """x(z; C) = sum_{k=1}^{trunc_k} C^k D_k exp(z k log a).

    ``D`` aliases phi's coefficient buffer from index 1, so D_k is phi_k.
    """

    a: complex
    C: complex
    D: np.ndarray
    trunc_k: int
    log_a: complex
    domain_radius: float

    def sector_bound(self) -> float:
        """Re(z log a) must stay below this for the sum to be trusted."""
        if self.C == 0:
            return math.inf
        return math.log(self.domain_radius / abs(self.C))


def build_transseries(pm: PoincareMap, C: complex) -> TransseriesSolution:
    D = pm.phi.coeffs[1:]
    return TransseriesSolution(
        a=pm.a, C=complex(C), D=D, trunc_k=D.size,
        log_a=cmath.log(pm.a), domain_radius=pm.phi_domain(),
    )


def eval_embedding(ts: TransseriesSolution, z: complex) -> complex:
    """Value of the embedded solution at complex "time" z."""
    if ts.C == 0:
        return 0j
    X = ts.C * cmath.exp(complex(z) * ts.log_a)
    if not abs(X) < ts.domain_radius:
        raise DomainError(
            f"|C a^z| = {abs(X):.6g} outside the convergence region (< {ts.domain_radius:.6g})")
    acc = 0j
    for d in ts.D[::-1]:
        acc = (acc + d) * X
    return acc


def orbit(spec: RecurrenceSpec, x0: complex, n: int) -> np.ndarray:
    """x_0..x_n by direct iteration of G."""
    out = np.empty(n + 1, dtype=np.complex128)
    out[0] = x0
    for i in range(n):
        out[i + 1] = spec.G(out[i])
    return out


def initial_condition_to_C(pm: PoincareMap, x0: complex) -> complex:
    """C = Q(x0), the linear coordinate of the orbit started at x0."""
    return constant_of_motion(pm, x0, 0)


def constant_of_motion(pm: PoincareMap, x: complex, n: int) -> complex:
    """a^{-n} Q(x); constant when x runs along an orbit x = x_n."""
    x = complex(x)
    if not abs(x) < pm.q_domain():
        raise DomainError(f"|x| = {abs(x):.6g} outside Q's reliable disk (< {pm.q_domain():.6g})")
    return pm.a ** (-n) * ps.evaluate(pm.q, x)


# -- Riccati closed form ---------------------------------------------------

@dataclass(frozen=True)
class RiccatiReport:
    a: complex
    c: complex
    x0: complex
    n_max: int
    max_rel_error: float
    status: str
    pole_index: int | None = None

    def to_json(self) -> dict:
        return {
            "inputs": {"a": _cjson(self.a), "c": _cjson(self.c), "x0": _cjson(self.x0),
                       "n_max": self.n_max},
            "max_rel_error": self.max_rel_error,
            "status": self.status,
            "pole_index": self.pole_index,
        }


def riccati_closed_form(a: complex, c: complex, x0: complex, n: int) -> complex:
    """1/x_n = a^{-n} (C - c/(a-1)) + c/(a-1) with C = 1/x0."""
    fixed = c / (a - 1)
    return 1.0 / (a ** (-n) * (1.0 / x0 - fixed) + fixed)


def verify_riccati(a: complex, c: complex, x0: complex, n_max: int) -> RiccatiReport:
    """Compare iteration of a x / (1 + c x) with the closed-form orbit."""
    a, c, x0 = complex(a), complex(c), complex(x0)
    if a == 1:
        raise PreconditionError("a = 1 makes c/(a-1) undefined")
    if x0 == 0:
        raise PreconditionError("x0 must be nonzero (C = 1/x0)")
    if n_max < 0:
        raise PreconditionError("n_max must be >= 0")
    x = x0
    worst = 0.0
    for n in range(n_max + 1):
        exact = riccati_closed_form(a, c, x0, n)
        worst = max(worst, abs(x - exact) / abs(exact))
        if n == n_max:
            break
        den = 1 + c * x
        if abs(den) <= 1e-15 * max(1.0, abs(c * x)):
            return RiccatiReport(a, c, x0, n_max, worst, "pole", n)
        x = a * x / den
    return RiccatiReport(a, c, x0, n_max, worst, "ok")


# -- nonresonance ----------------------------------------------------------

@dataclass(frozen=True)
class NonresonanceResult:
    mu: tuple
    search_bound: int
    nonresonant: bool
    witness: tuple | None = None
    component: int | None = None

    def __bool__(self) -> bool:
        return self.nonresonant

    def to_json(self) -> dict:
        return {
            "inputs": {"mu": [_cjson(m) for m in self.mu], "search_bound": self.search_bound},
            "witness": None if self.witness is None else
            {"k": list(self.witness), "component": self.component},
            "status": "nonresonant" if self.nonresonant else "resonant",
        }


def _multi_indices(m: int, bound: int):
    """All k in N^m with |k| <= bound, in order of increasing |k|."""
    for total in range(bound + 1):
        for cut in itertools.combinations(range(total + m - 1), m - 1):
            edges = (-1, *cut, total + m - 1)
            yield tuple(edges[i + 1] - edges[i] - 1 for i in range(m))


def nonresonance_check(mu: Sequence[complex], search_bound: int,
                       tol: float = 1e-9) -> NonresonanceResult:
    """Search k in N^m, |k| <= bound, k != e_j with mu_j = k.mu (mod 2 pi i)."""
    mu_arr = np.array(mu, dtype=np.complex128)
    if mu_arr.size == 0:
        raise PreconditionError("mu must be nonempty")
    m = mu_arr.size
    scale = max(1.0, float(np.max(np.abs(mu_arr))))
    for k in _multi_indices(m, search_bound):
        kmu = complex(np.dot(k, mu_arr))
        for j in range(m):
            if sum(k) == 1 and k[j] == 1:
                continue
            d = (kmu - mu_arr[j]) / (2j * math.pi)
            if abs(d - round(d.real)) < tol * scale * max(1, sum(k)):
                return NonresonanceResult(tuple(mu_arr), search_bound, False, k, j)
    return NonresonanceResult(tuple(mu_arr), search_bound, True)


def _cjson(z: complex) -> list:
    z = complex(z)
    return [z.real, z.imag]


def eval_q_continued(pm: PoincareMap, x, max_iter: int = 10_000):
    """Q beyond its Taylor disk via Q(x) = a^{-m} Q(G^m(x)).

    Iterates G until the point enters Q's reliable disk; points that never
    do within ``max_iter`` steps (outside the basin) give nan.
    """
    x = np.array(x, dtype=np.complex128, ndmin=1)
    out = np.full(x.shape, np.nan + 0j)
    inside = 0.5 * pm.q_domain()
    cur = x.copy()
    todo = np.arange(x.size)
    for m in range(max_iter + 1):
        hit = np.abs(cur) < inside
        if np.any(hit):
            out[todo[hit]] = pm.a ** (-m) * ps.evaluate(pm.q, cur[hit])
            todo, cur = todo[~hit], cur[~hit]
        if todo.size == 0:
            break
        with np.errstate(over="ignore", invalid="ignore"):
            cur = pm.spec.G(cur)
        alive = np.isfinite(cur) & (np.abs(cur) < 1e150)
        todo, cur = todo[alive], cur[alive]
    return out
