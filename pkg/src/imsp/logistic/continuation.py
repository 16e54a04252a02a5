"""Analytic continuation of F beyond its Taylor disk, and branch points.

Solving F(z^2) (F(z) - 1) a = F(z)^2 for F(z) gives

    F(z) = (a W + s) / 2,   W = F(z^2),   s^2 = D = a^2 W^2 - 4 a W.

Because |z^2| < |z| inside the unit disk, F on a path is obtained from F on
the squared path, recursively, until the path lies in the disk where the
series is trusted.  The sign of s is fixed at the first path point (inside
the disk, where F is known) and then carried along by continuity.  The
recursion is the "ladder": depth = number of squarings needed.

Branch points of F sit where D vanishes, i.e. F(z^2) = 4/a; a closed loop
around one flips the sign of s, which :func:`monodromy_gap` measures.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .. import series as ps
from ..conjugation import composition_defect
from ..errors import (
    BranchCollisionError,
    ConvergenceError,
    NumericalError,
    PreconditionError,
)
from .superstable import SuperstableSeries, solve_superstable

PATH_STEP = 1e-3
COLLISION_TOL = 1e-10
AMBIGUITY = 0.5
EVAL_TOL = 1e-8
LOOP_STEPS = 64
LOOP_FRACTION = 1e-3
EPS_CAP = 64
MAX_ROOT_SEARCH = 2 ** 8


@dataclass(frozen=True)
class PathValues:
    values: np.ndarray
    roots: np.ndarray  # continued square root s along the path
    depth: int


def _radial_path(target: complex, start_radius: float, step: float,
                 fine_tail: float | None = None) -> np.ndarray:
    r = abs(target)
    u = target / r
    r0 = min(start_radius, r)
    if fine_tail is None or fine_tail >= step:
        n = max(2, int(math.ceil((r - r0) / step)) + 1)
        return u * np.linspace(r0, r, n)
    # coarse until 20 fine steps before the end, then fine
    knee = max(r0, r - 20 * fine_tail)
    coarse = np.linspace(r0, knee, max(2, int(math.ceil((knee - r0) / step)) + 1))
    fine = np.linspace(knee, r, max(2, int(math.ceil((r - knee) / fine_tail)) + 1))[1:]
    return u * np.concatenate([coarse, fine])


def _along(ss: SuperstableSeries, path: np.ndarray, r_safe: float) -> PathValues:
    a = ss.a
    if np.max(np.abs(path)) <= r_safe:
        vals = ps.evaluate(ss.f, path)
        return PathValues(vals, np.full(path.shape, np.nan + 0j), 0)
    if abs(path[0]) > r_safe:
        raise PreconditionError("continuation paths must start inside the series disk")
    inner = _along(ss, path * path, r_safe)
    W = inner.values
    four_over_a = 4.0 / a
    # points inside the series disk are evaluated directly, so only the
    # ladder points can collide with a branch value
    inside = np.abs(path) <= r_safe
    near = np.abs(W - four_over_a) <= COLLISION_TOL * abs(four_over_a)
    near |= np.abs(W) <= COLLISION_TOL
    near &= ~inside
    if np.any(near):
        i = int(np.argmax(near))
        raise BranchCollisionError(
            f"path meets F(z^2) in {{0, 4/a}} at z = {path[i]:.12g}", complex(path[i]))
    D = a * a * W * W - 4.0 * a * W
    sq = np.sqrt(D)
    vals = np.empty_like(W)
    roots = np.empty_like(W)
    f0 = complex(ps.evaluate(ss.f, path[0]))
    vals[0] = f0
    prev = 2.0 * f0 - a * W[0]
    roots[0] = prev
    direct = ps.evaluate(ss.f, path[inside])
    vals[inside] = direct
    roots[inside] = 2.0 * direct - a * W[inside]
    for i in range(1, path.size):
        if inside[i]:
            prev = roots[i]
            continue
        s = sq[i]
        d_plus, d_minus = abs(s - prev), abs(s + prev)
        if d_minus < d_plus:
            s = -s
            d_plus, d_minus = d_minus, d_plus
        if d_plus > AMBIGUITY * d_minus:
            raise BranchCollisionError(
                f"branch choice ambiguous near z = {path[i]:.12g} (path too coarse or "
                "too close to a branch point)", complex(path[i]))
        roots[i] = s
        vals[i] = 0.5 * (a * W[i] + s)
        prev = s
    return PathValues(vals, roots, inner.depth + 1)


def continue_along(ss: SuperstableSeries, path, r_safe: float | None = None) -> PathValues:
    """F along an arbitrary path whose first point lies in the series disk."""
    path = np.asarray(path, dtype=np.complex128)
    return _along(ss, path, ss.safe_radius() if r_safe is None else r_safe)


@dataclass(frozen=True)
class ContinuedValue:
    target: complex
    value: complex
    depth: int
    branch_sign: int  # +1 if the principal square root was used at the target


def continue_F(ss: SuperstableSeries, targets, step: float = PATH_STEP) -> list[ContinuedValue]:
    """Continue F radially from the series disk to each target (|z| < 1)."""
    r_safe = ss.safe_radius()
    out = []
    for t in np.atleast_1d(np.asarray(targets, dtype=np.complex128)):
        t = complex(t)
        if not abs(t) < 1:
            raise PreconditionError(f"target {t} must lie inside the unit disk")
        if abs(t) <= r_safe:
            out.append(ContinuedValue(t, complex(ps.evaluate(ss.f, t)), 0, 0))
            continue
        path = _radial_path(t, 0.5 * r_safe, step)
        pv = _along(ss, path, r_safe)
        root = pv.roots[-1]
        W = (2 * pv.values[-1] - root) / ss.a
        principal = cmath.sqrt(ss.a * ss.a * W * W - 4 * ss.a * W)
        sign = 1 if abs(root - principal) <= abs(root + principal) else -1
        out.append(ContinuedValue(t, complex(pv.values[-1]), pv.depth, sign))
    return out


def continued_values(ss: SuperstableSeries, targets, step: float = PATH_STEP) -> np.ndarray:
    return np.array([cv.value for cv in continue_F(ss, targets, step)])


def monodromy_gap(ss: SuperstableSeries, center: complex, radius: float,
                  steps: int = LOOP_STEPS) -> tuple[float, complex, complex]:
    """|F(end) - F(start)| for one counter-clockwise loop around ``center``.

    The loop starts on the segment from 0 to ``center``; F at the start is
    reached radially.  Returns (gap, start value, end value).
    """
    center = complex(center)
    r_safe = ss.safe_radius()
    u = center / abs(center)
    start = center - radius * u
    radial = _radial_path(start, 0.5 * r_safe, PATH_STEP, fine_tail=radius / 4)
    theta = np.linspace(0.0, 2 * math.pi, steps + 1)[1:]
    loop = center - radius * u * np.exp(1j * theta)
    pv = _along(ss, np.concatenate([radial, loop]), r_safe)
    f_start = complex(pv.values[radial.size - 1])
    f_end = complex(pv.values[-1])
    return abs(f_end - f_start), f_start, f_end


# -- branch points for large |a| ---------------------------------------------

@dataclass(frozen=True)
class BranchPointCertificate:
    a: complex
    n_used: int
    eps_n: complex
    z0: complex
    w: complex            # z1^2, where F(w) = 4/a
    z1: complex
    residual: float       # |F(z1^2) - 4/a|
    monodromy_gap: float
    root_index: int
    order: int

    def to_json(self) -> dict:
        c = lambda z: [complex(z).real, complex(z).imag]  # noqa: E731
        return {
            "a": c(self.a), "n_used": self.n_used, "eps_n": c(self.eps_n),
            "z0": c(self.z0), "w": c(self.w), "z1": c(self.z1),
            "abs_z1": abs(self.z1), "residual": self.residual,
            "monodromy_gap": self.monodromy_gap, "root_index": self.root_index,
            "order": self.order,
        }


def eps_orbit(a: complex, stop_radius: float, cap: int = EPS_CAP) -> list[complex]:
    """eps_0 = 4/a, eps_{n+1} = eps_n^2 / (a (eps_n - 1)) until |eps_n| < stop_radius."""
    eps = [4.0 / complex(a)]
    while abs(eps[-1]) >= stop_radius:
        if len(eps) > cap:
            raise ConvergenceError(f"eps_n did not enter |eps| < {stop_radius:.3g} in {cap} steps")
        e = eps[-1]
        if e == 1:
            raise NumericalError("eps orbit hit the pole eps = 1")
        eps.append(e * e / (complex(a) * (e - 1)))
    return eps


def _newton_on_value(ss, w, target, iters=6):
    h = 1e-7 * max(abs(w), 1e-3)
    for _ in range(iters):
        fw, fp, fm = continued_values(ss, [w, w + h, w - h])
        err = fw - target
        if abs(err) < 1e-14 * abs(target):
            break
        w = w - err / ((fp - fm) / (2 * h))
    return w


def locate_branch_point(a: complex, order: int = 128, root_index: int | None = None,
                        ss: SuperstableSeries | None = None) -> BranchPointCertificate:
    """Construct and certify a square-root branch point of F in the unit disk.

    Without the |a| > 5 guard of :func:`find_branch_point`; fails with a
    numerical error when the eps orbit does not decay or, without ``root_index``,
    when the ladder is deeper than log2(MAX_ROOT_SEARCH).
    """
    a = complex(a)
    ss = ss or solve_superstable(a, order)
    q = ss.q
    if composition_defect(ss.f, q, ps.TruncatedPowerSeries.variable(q.trunc_order)) > 1e-8:
        raise NumericalError("reversion of F is not accurate enough to invert eps_n")
    q_disk = min(ss.q_radius, ps.reliable_radius(q, 1e-14))
    eps = eps_orbit(a, 0.5 * q_disk)
    n = len(eps) - 1
    if n == 0:
        raise NumericalError("4/a already lies in Q's disk; no ladder to climb")
    z0 = complex(ps.evaluate(q, eps[-1]))
    base = z0 ** (1.0 / 2 ** n) if z0 != 0 else 0j
    m = 2 ** n
    if root_index is None and m > MAX_ROOT_SEARCH:
        raise NumericalError(
            f"ladder depth {n} needs a search over 2^{n} roots (cap {MAX_ROOT_SEARCH}); "
            "pass root_index to pick one")
    target = 4.0 / a
    indices = [root_index] if root_index is not None else range(m)
    best = None
    for j in indices:
        w = base * cmath.exp(2j * math.pi * j / m)
        if not abs(w) < 1:
            continue
        try:
            val = continued_values(ss, [w])[0]
        except NumericalError:
            continue
        err = abs(val - target)
        if best is None or err < best[0]:
            best = (err, j, w)
    if best is None:
        raise NumericalError("no 2^n-th root of z0 could be reached by continuation")
    _, j, w = best
    w = _newton_on_value(ss, w, target)
    residual = abs(continued_values(ss, [w])[0] - target)
    z1 = cmath.sqrt(w)
    gap, _, _ = monodromy_gap(ss, z1, LOOP_FRACTION * abs(z1))
    return BranchPointCertificate(a, n, eps[-1], z0, w, z1, residual, gap, j, ss.order)


def find_branch_point(a: complex, order: int = 128,
                      root_index: int | None = None) -> BranchPointCertificate:
    """Branch-point certificate for |a| > 5 (see :func:`locate_branch_point`)."""
    if not abs(complex(a)) > 5:
        raise PreconditionError(f"find_branch_point needs |a| > 5, got |a| = {abs(complex(a)):.6g}")
    cert = locate_branch_point(a, order, root_index)
    if not cert.monodromy_gap > 10 * EVAL_TOL:
        raise NumericalError(f"monodromy gap {cert.monodromy_gap:.3e} too small to certify")
    return cert


def doubling_gap(ss: SuperstableSeries, z1: complex, sign: int = 1) -> tuple[complex, float]:
    """Monodromy gap around a square root z2 of a certified branch point z1."""
    z2 = sign * cmath.sqrt(complex(z1))
    gap, _, _ = monodromy_gap(ss, z2, LOOP_FRACTION * abs(z2))
    return z2, gap
