"""IMSP classification of the logistic map and supporting identities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import series as ps
from ..errors import NumericalError, PreconditionError
from .continuation import (
    continued_values,
    eps_orbit,
    find_branch_point,
    locate_branch_point,
)
from .superstable import (
    EXACT_TOL,
    SuperstableSeries,
    explicit_solution,
    is_exactly,
    solve_superstable,
)

SOLVABLE = (-2.0, 0.0, 2.0, 4.0)
EVIDENCE_ORDER = 200
RATIONAL_DEGREE_CAP = 12


def _integer_log2(x: complex, tol: float = EXACT_TOL) -> int | None:
    """Integer p >= 1 with 2**p == x, if any."""
    x = complex(x)
    if abs(x.imag) > tol or x.real <= 0:
        return None
    p = round(math.log2(x.real))
    if p >= 1 and abs(2.0 ** p - x.real) <= tol * max(1.0, x.real):
        return int(p)
    return None


@dataclass(frozen=True)
class Z1Analysis:
    a: complex
    c0_candidates: tuple
    c0_branch: complex | None
    multiplier_at_c0: complex | None
    analytic_k: int | None
    laurent_p: int | None
    admissible: bool
    growth_exponent: float | None = None

    def to_json(self) -> dict:
        c = lambda z: None if z is None else [complex(z).real, complex(z).imag]  # noqa: E731
        return {
            "c0_candidates": [c(v) for v in self.c0_candidates],
            "c0_branch": c(self.c0_branch),
            "multiplier_at_c0": c(self.multiplier_at_c0),
            "analytic_k": self.analytic_k,
            "laurent_p": self.laurent_p,
            "admissible": self.admissible,
            "growth_exponent": self.growth_exponent,
        }


def analyze_z1(ss: SuperstableSeries) -> Z1Analysis:
    """Necessary conditions for F to be analytic or meromorphic at z = 1.

    Setting z = 1 in F(z^2) = R(F(z)), R(w) = w^2/(a(w-1)), forces F(1) to be a
    fixed point of R: 0 (excluded, it forces F = 0) or a/(a-1).  If F is
    analytic at 1 and c_m is its first nonzero higher coefficient, matching
    (z-1)^m gives R'(a/(a-1)) = 2 - a = 2^m, i.e. a = -2(2^k - 1) with
    k = m - 1.  If F has a pole of order p at 1, a F(z^2)/F(z) -> 1 forces
    a = 2^p.  Only k = 1 (a = -2) and p in {1, 2} (a = 2, 4) keep |a| < 5.
    """
    a = ss.a
    cands = [0j]
    c0 = mult = None
    if a != 1:
        c0 = a / (a - 1)
        cands.append(c0)
        mult = c0 * (c0 - 2) / (a * (c0 - 1) ** 2)
    k_plus_1 = _integer_log2(2 - a)       # 2 - a = 2^(k+1)
    analytic_k = k_plus_1 - 1 if k_plus_1 is not None and k_plus_1 >= 2 else None
    laurent_p = _integer_log2(a)
    admissible = (analytic_k == 1) or (laurent_p in (1, 2))
    growth = None
    try:
        est = ps.estimate_radius(ss.f, "cauchy_hadamard")
        growth = est.diagnostics.get("power_exponent")
    except PreconditionError:
        pass
    return Z1Analysis(a, tuple(cands), c0, mult, analytic_k, laurent_p, admissible, growth)


@dataclass(frozen=True)
class ImspVerdict:
    a: complex
    verdict: str
    evidence: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"a": [self.a.real, self.a.imag], "verdict": self.verdict, "evidence": self.evidence}


def _solvable_value(a: complex) -> float | None:
    for v in SOLVABLE:
        if is_exactly(a, v):
            return v
    return None


def classify_imsp(a: complex, order: int = EVIDENCE_ORDER) -> ImspVerdict:
    """Verdict ``solvable`` exactly on {-2, 0, 2, 4}, ``barrier`` elsewhere.

    The verdict is the classification itself; the evidence record collects
    the numerical and algebraic facts behind it.
    """
    a = complex(a)
    special = _solvable_value(a)
    if special == 0.0:
        return ImspVerdict(a, "solvable", {
            "c0_branch": None, "laurent_p": None, "radius": None,
            "note": "a = 0: x_n = 0 for n >= 1, nothing to analyse",
        })
    ss = solve_superstable(a, order)
    z1 = analyze_z1(ss)
    evidence: dict = {
        "c0_branch": z1.to_json()["c0_branch"],
        "laurent_p": z1.laurent_p,
        "analytic_k": z1.analytic_k,
        "z1_admissible": z1.admissible,
        "radius": ss.radius_estimate,
        "order": order,
    }
    if special is not None:
        evidence["closed_form"] = explicit_solution(a).formula
        return ImspVerdict(a, "solvable", evidence)

    try:
        eps = eps_orbit(a, 0.5 * min(ss.q_radius, ps.reliable_radius(ss.q, 1e-14)), cap=40)
        evidence["eps_orbit_decays"] = True
        evidence["eps_steps"] = len(eps) - 1
    except NumericalError:
        evidence["eps_orbit_decays"] = False
    if abs(a) > 5:
        cert = find_branch_point(a, order=min(order, 128))
        evidence["branch_point"] = cert.to_json()
    elif evidence["eps_orbit_decays"]:
        try:
            cert = locate_branch_point(a, order=min(order, 128))
            evidence["branch_point"] = cert.to_json()
        except NumericalError as exc:
            evidence["branch_point_error"] = str(exc)
    return ImspVerdict(a, "barrier", evidence)


# -- rational iterates R_n ----------------------------------------------------

@dataclass(frozen=True)
class RationalIterate:
    """R_n = R_1 composed n times, R_1(w) = w^2 / (a (w - 1)).

    ``numer``/``denom`` are ascending coefficient arrays when expanded.  The
    monomial form loses accuracy quickly (its coefficients grow like binomials
    of degree 2^n), so calling the object always evaluates the composition;
    :meth:`eval_expanded` evaluates the stored polynomials.
    """

    a: complex
    n: int
    numer: np.ndarray | None
    denom: np.ndarray | None

    @property
    def expanded(self) -> bool:
        return self.numer is not None

    def __call__(self, w):
        return self.compose_eval(w)

    def eval_expanded(self, w):
        if not self.expanded:
            raise PreconditionError(f"R_{self.n} was not expanded")
        pv = np.polynomial.polynomial.polyval
        w = np.asarray(w, dtype=np.complex128)
        with np.errstate(over="ignore", invalid="ignore"):
            out = pv(w, self.numer) / pv(w, self.denom)
        return complex(out) if out.ndim == 0 else out

    def compose_eval(self, w):
        w = np.asarray(w, dtype=np.complex128)
        for _ in range(self.n):
            w = w * w / (self.a * (w - 1))
        return complex(w) if w.ndim == 0 else w


def build_rational_iterate(a: complex, n: int, expand: bool | None = None) -> RationalIterate:
    """R_n, expanded into numerator/denominator polynomials when feasible.

    ``expand=None`` expands up to the degree cap and silently keeps the
    pointwise form if the coefficients overflow; ``expand=True`` makes both
    conditions errors.
    """
    a = complex(a)
    if n < 0:
        raise PreconditionError("n must be >= 0")
    auto = expand is None
    if auto:
        expand = n <= RATIONAL_DEGREE_CAP
    elif expand and n > RATIONAL_DEGREE_CAP:
        raise PreconditionError(
            f"degree 2^{n} exceeds the expansion cap 2^{RATIONAL_DEGREE_CAP}")
    if not expand:
        return RationalIterate(a, n, None, None)
    P = np.array([0.0, 1.0], dtype=np.complex128)
    Q = np.array([1.0], dtype=np.complex128)
    lin = np.array([-a, a])  # a (w - 1)
    for _ in range(n):
        d = P.size - 1
        # P(N/D) D^d and Q(N/D) D^d with N = w^2, D = a(w - 1), by the
        # Horner-like accumulation acc <- acc*D + p_k N^k.
        new_p = np.zeros(1, dtype=np.complex128)
        new_q = np.zeros(1, dtype=np.complex128)
        qpad = np.concatenate([Q, np.zeros(P.size - Q.size)])
        with np.errstate(over="ignore", invalid="ignore"):
            for k in range(d + 1):
                mono = np.zeros(2 * k + 1, dtype=np.complex128)
                mono[-1] = 1.0
                new_p = np.polynomial.polynomial.polyadd(
                    np.polynomial.polynomial.polymul(new_p, lin) if k else new_p, P[k] * mono)
                new_q = np.polynomial.polynomial.polyadd(
                    np.polynomial.polynomial.polymul(new_q, lin) if k else new_q, qpad[k] * mono)
        P, Q = np.trim_zeros(new_p, "b"), np.trim_zeros(new_q, "b")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(Q))):
            if auto:
                return RationalIterate(a, n, None, None)
            raise NumericalError(f"coefficient overflow while expanding R_{n}")
    return RationalIterate(a, n, P, Q)


def iterate_identity_residual(ss: SuperstableSeries, ri: RationalIterate, samples) -> float:
    """max |F(z^(2^n)) - R_n(F(z))| / max(1, |F(z^(2^n))|) over the samples."""
    z = np.asarray(samples, dtype=np.complex128)
    lhs = ps.evaluate(ss.f, z ** (2 ** ri.n))
    rhs = ri(ps.evaluate(ss.f, z))
    return float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))))


def q_functional_residual(ss: SuperstableSeries, samples) -> float:
    """max |Q(z)^2 - Q(z^2 / (a (z - 1)))| with Q the inverse of F."""
    z = np.asarray(samples, dtype=np.complex128)
    q = ss.q
    limit = min(0.9 * ss.q_radius, ps.reliable_radius(q))
    img = z * z / (ss.a * (z - 1))
    if np.any(np.abs(z) >= limit) or np.any(np.abs(img) >= limit):
        raise PreconditionError("samples (or their images) leave Q's reliable disk")
    return float(np.max(np.abs(ps.evaluate(q, z) ** 2 - ps.evaluate(q, img))))


def superstable_orbit(ss: SuperstableSeries, y0: complex, n: int) -> complex:
    """y_n = F(zeta^(2^n)) with zeta = Q(y0): the orbit through the conjugation."""
    q = ss.q
    if not abs(y0) < min(0.9 * ss.q_radius, ps.reliable_radius(q)):
        raise PreconditionError("y0 outside Q's reliable disk")
    zeta = complex(ps.evaluate(q, y0))
    z = zeta ** (2 ** n)
    if abs(z) <= ss.safe_radius():
        return complex(ps.evaluate(ss.f, z))
    return complex(continued_values(ss, [z])[0])

