"""Truncated complex power series.

A :class:`TruncatedPowerSeries` stores the coefficients of

    s(z) = sum_{k=low_order}^{trunc_order} c_k (z - center)^k

in double precision.  ``trunc_order`` is the highest retained exponent;
coefficients beyond it are *unknown*, not zero, so every binary operation
truncates to the smaller of its operands' orders.

Negative ``low_order`` (Laurent parts) is supported for storage, printing and
evaluation only.  Arithmetic requires Taylor inputs.

Series are immutable: the coefficient array is flagged read-only and every
operation returns a new object.  ``depth`` counts the arithmetic depth that
produced a series and serves as a crude accumulated-rounding indicator.

    >>> s = TruncatedPowerSeries([1, 1], trunc_order=2)
    >>> (s * s).coeffs.real.tolist()
    [1.0, 2.0, 1.0]
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BranchPointError,
    CenterMismatchError,
    NotInvertibleError,
    PreconditionError,
    SeriesOverflowError,
)

DEFAULT_ORDER = 64

# Coefficients smaller than this fraction of their neighbours are treated as
# structural zeros by the radius estimators.
_LOCAL_ZERO = 1e-11

# Largest |beta| accepted for the k**beta prefactor in the Cauchy-Hadamard fit.
_MAX_POWER = 3.0


def _as_array(coeffs) -> np.ndarray:
    arr = np.array(coeffs, dtype=np.complex128).ravel()
    if arr.size == 0:
        raise PreconditionError("a series needs at least one coefficient")
    return arr


class TruncatedPowerSeries:
    """Immutable truncated power (or Laurent) series about ``center``."""

    __slots__ = ("_coeffs", "_center", "_low", "_depth")

    def __init__(self, coeffs: Iterable[complex], center: complex = 0.0,
                 low_order: int = 0, trunc_order: int | None = None,
                 depth: int = 0):
        arr = _as_array(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs)
        if trunc_order is not None:
            n = trunc_order - low_order + 1
            if n < 1:
                raise PreconditionError("trunc_order must be >= low_order")
            if arr.size < n:
                arr = np.concatenate([arr, np.zeros(n - arr.size, dtype=np.complex128)])
            else:
                arr = arr[:n].copy()
        if not np.all(np.isfinite(arr)):
            raise SeriesOverflowError("series coefficients must be finite")
        arr.setflags(write=False)
        self._coeffs = arr
        self._center = complex(center)
        self._low = int(low_order)
        self._depth = int(depth)

    # -- basic accessors -------------------------------------------------
    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def center(self) -> complex:
        return self._center

    @property
    def low_order(self) -> int:
        return self._low

    @property
    def trunc_order(self) -> int:
        return self._low + self._coeffs.size - 1

    @property
    def depth(self) -> int:
        return self._depth

    @property
    def is_taylor(self) -> bool:
        return self._low >= 0

    def __len__(self) -> int:
        return self._coeffs.size

    def __getitem__(self, k: int) -> complex:
        """Coefficient of ``(z - center)**k``; zero below ``low_order``."""
        if k > self.trunc_order:
            raise IndexError(f"coefficient {k} beyond truncation order {self.trunc_order}")
        if k < self._low:
            return 0j
        return complex(self._coeffs[k - self._low])

    def taylor(self) -> np.ndarray:
        """Coefficients c_0..c_N as a fresh array (Taylor series only)."""
        _require_taylor(self)
        out = np.zeros(self.trunc_order + 1, dtype=np.complex128)
        out[self._low:] = self._coeffs
        return out

    def __repr__(self) -> str:
        head = ", ".join(f"{c:.6g}" for c in self._coeffs[:6])
        more = ", ..." if self._coeffs.size > 6 else ""
        return (f"TruncatedPowerSeries([{head}{more}], center={self._center}, "
                f"low_order={self._low}, trunc_order={self.trunc_order})")

    # -- constructors ----------------------------------------------------
    @classmethod
    def zero(cls, order: int = DEFAULT_ORDER, center: complex = 0.0) -> "TruncatedPowerSeries":
        return cls([0.0], center=center, trunc_order=order)

    @classmethod
    def constant(cls, value: complex, order: int = DEFAULT_ORDER,
                 center: complex = 0.0) -> "TruncatedPowerSeries":
        return cls([value], center=center, trunc_order=order)

    @classmethod
    def variable(cls, order: int = DEFAULT_ORDER, center: complex = 0.0) -> "TruncatedPowerSeries":
        """The series of ``z - center`` (the identity map when center is 0)."""
        if order < 1:
            raise PreconditionError("the variable needs trunc_order >= 1")
        return cls([0.0, 1.0], center=center, trunc_order=order)

    def with_order(self, order: int) -> "TruncatedPowerSeries":
        """Truncate (or zero-pad) to ``order``."""
        return TruncatedPowerSeries(self._coeffs, self._center, self._low, order, self._depth)

    # -- operators -------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, TruncatedPowerSeries):
            return add(self, other)
        return add(self, TruncatedPowerSeries.constant(other, self.trunc_order, self._center))

    __radd__ = __add__

    def __neg__(self):
        return TruncatedPowerSeries(-self._coeffs, self._center, self._low, None, self._depth)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TruncatedPowerSeries):
            return mul(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TruncatedPowerSeries):
            return divide(self, other)
        return scale(self, 1.0 / complex(other))

    def __call__(self, z):
        return evaluate(self, z)


def _require_taylor(*series: TruncatedPowerSeries) -> None:
    for s in series:
        if s.low_order < 0:
            raise PreconditionError("arithmetic requires Taylor series (low_order >= 0)")


def _common(s1: TruncatedPowerSeries, s2: TruncatedPowerSeries) -> int:
    if s1.center != s2.center:
        raise CenterMismatchError(f"centers differ: {s1.center} vs {s2.center}")
    _require_taylor(s1, s2)
    return min(s1.trunc_order, s2.trunc_order)


def add(s1: TruncatedPowerSeries, s2: TruncatedPowerSeries) -> TruncatedPowerSeries:
    n = _common(s1, s2)
    out = s1.taylor()[: n + 1] + s2.taylor()[: n + 1]
    return TruncatedPowerSeries(out, s1.center, 0, n, max(s1.depth, s2.depth) + 1)


def scale(s: TruncatedPowerSeries, factor: complex) -> TruncatedPowerSeries:
    return TruncatedPowerSeries(s.coeffs * complex(factor), s.center, s.low_order,
                                None, s.depth + 1)


def mul(s1: TruncatedPowerSeries, s2: TruncatedPowerSeries) -> TruncatedPowerSeries:
    """Cauchy product truncated to the smaller order."""
    n = _common(s1, s2)
    out = np.convolve(s1.taylor()[: n + 1], s2.taylor()[: n + 1])[: n + 1]
    return TruncatedPowerSeries(out, s1.center, 0, n, max(s1.depth, s2.depth) + 1)


def reciprocal(s: TruncatedPowerSeries) -> TruncatedPowerSeries:
    """1/s for a Taylor series with nonzero constant term."""
    _require_taylor(s)
    c = s.taylor()
    if c[0] == 0:
        raise PreconditionError("reciprocal needs a nonzero constant term")
    n = c.size
    b = np.zeros(n, dtype=np.complex128)
    b[0] = 1.0 / c[0]
    for k in range(1, n):
        b[k] = -np.dot(c[1 : k + 1], b[k - 1 :: -1][:k]) * b[0]
    return TruncatedPowerSeries(b, s.center, 0, None, s.depth + 1)


def divide(num: TruncatedPowerSeries, den: TruncatedPowerSeries) -> TruncatedPowerSeries:
    return mul(num, reciprocal(den))


def derivative(s: TruncatedPowerSeries) -> TruncatedPowerSeries:
    """Termwise derivative; the result has one order less."""
    c = s.taylor()
    if c.size == 1:
        return TruncatedPowerSeries([0.0], s.center, 0, 0, s.depth)
    return TruncatedPowerSeries(c[1:] * np.arange(1, c.size), s.center, 0, None, s.depth + 1)


def dilate(s: TruncatedPowerSeries, factor: complex) -> TruncatedPowerSeries:
    """Series of ``s(center + factor*(z - center))``; e.g. phi(az)."""
    c = s.taylor()
    powers = complex(factor) ** np.arange(c.size)
    return TruncatedPowerSeries(c * powers, s.center, 0, None, s.depth + 1)


def substitute_power(s: TruncatedPowerSeries, m: int) -> TruncatedPowerSeries:
    """Series of ``s((z - center)**m)`` keeping the same truncation order."""
    if m < 1:
        raise PreconditionError("power substitution needs m >= 1")
    c = s.taylor()
    n = s.trunc_order
    out = np.zeros(n + 1, dtype=np.complex128)
    idx = np.arange(0, n // m + 1)
    out[idx * m] = c[idx]
    return TruncatedPowerSeries(out, s.center, 0, n, s.depth)


def shift_down(s: TruncatedPowerSeries, m: int, tol: float = 0.0) -> TruncatedPowerSeries:
    """Divide by ``(z - center)**m``; the first m coefficients must vanish.

    The truncation order drops by ``m``.
    """
    c = s.taylor()
    scale_ = float(np.max(np.abs(c))) if c.size else 0.0
    if np.any(np.abs(c[:m]) > tol * max(scale_, 1.0)):
        raise PreconditionError(f"series is not divisible by z^{m}")
    return TruncatedPowerSeries(c[m:], s.center, 0, None, s.depth)


def shift_up(s: TruncatedPowerSeries, m: int) -> TruncatedPowerSeries:
    """Multiply by ``(z - center)**m``; the truncation order grows by ``m``."""
    c = s.taylor()
    return TruncatedPowerSeries(np.concatenate([np.zeros(m, np.complex128), c]),
                                s.center, 0, None, s.depth)


def compose(outer: TruncatedPowerSeries, inner: TruncatedPowerSeries,
            tol: float = 1e-13) -> TruncatedPowerSeries:
    """Series of ``outer(inner(z))`` about ``inner.center``.

    ``inner``'s constant term must equal ``outer.center`` (zero constant term
    relative to the outer expansion point).
    """
    _require_taylor(outer, inner)
    ci = inner.taylor()
    offset = ci[0] - outer.center
    if abs(offset) > tol * max(1.0, float(np.max(np.abs(ci)))):
        raise PreconditionError(
            f"inner series has constant term {ci[0]} != outer center {outer.center}")
    n = min(outer.trunc_order, inner.trunc_order)
    w = ci[: n + 1].copy()
    w[0] = 0.0
    co = outer.taylor()[: n + 1]
    acc = np.zeros(n + 1, dtype=np.complex128)
    acc[0] = co[n]
    # Horner; each multiplication by w raises the valuation by one, so the
    # running product only ever needs n+1 coefficients.
    for k in range(n - 1, -1, -1):
        acc = np.convolve(acc, w)[: n + 1]
        acc[0] += co[k]
    return TruncatedPowerSeries(acc, inner.center, 0, n,
                                max(outer.depth, inner.depth) + n)


def sqrt_branch(s: TruncatedPowerSeries, root_of_constant: complex,
                rtol: float = 1e-8) -> TruncatedPowerSeries:
    """Square root of ``s`` on the branch whose constant term is ``root_of_constant``.

    Raises :class:`BranchPointError` when the constant term vanishes: the
    square root then has a branch point at the center.
    """
    _require_taylor(s)
    c = s.taylor()
    r0 = complex(root_of_constant)
    if c[0] == 0:
        raise BranchPointError("constant term vanishes: square-root branch point at the center")
    if abs(r0 * r0 - c[0]) > rtol * abs(c[0]):
        raise PreconditionError(
            f"root_of_constant**2 = {r0 * r0} is inconsistent with constant term {c[0]}")
    n = c.size
    r = np.zeros(n, dtype=np.complex128)
    r[0] = r0
    inv2r0 = 1.0 / (2.0 * r0)
    for k in range(1, n):
        acc = np.dot(r[1:k], r[k - 1 : 0 : -1]) if k > 1 else 0.0
        r[k] = (c[k] - acc) * inv2r0
    return TruncatedPowerSeries(r, s.center, 0, None, s.depth + 1)


def reversion(s: TruncatedPowerSeries) -> TruncatedPowerSeries:
    """Compositional inverse g with ``s(g(z)) = z`` (both about 0).

    Newton iteration ``g <- g - (s(g) - z) / s'(g)`` doubles the number of
    correct coefficients per step.
    """
    _require_taylor(s)
    c = s.taylor()
    if s.center != 0:
        raise PreconditionError("reversion is defined for series about 0")
    if c.size < 2 or c[1] == 0:
        raise NotInvertibleError("linear coefficient vanishes: series is not locally invertible")
    if abs(c[0]) > 1e-13 * max(1.0, float(np.max(np.abs(c)))):
        raise PreconditionError("reversion needs a zero constant term")
    n = s.trunc_order
    s0 = TruncatedPowerSeries(np.concatenate([[0.0], c[1:]]), 0.0, 0, n, s.depth)
    ds = derivative(s0).with_order(n)
    ident = TruncatedPowerSeries.variable(n)
    g = TruncatedPowerSeries([0.0, 1.0 / c[1]], 0.0, 0, n)
    correct = 1
    while correct < n:
        resid = compose(s0, g) - ident
        g = g - divide(resid, compose(ds, g))
        correct *= 2
    # one polishing step removes rounding drift left by the last doubling
    resid = compose(s0, g) - ident
    g = g - divide(resid, compose(ds, g))
    out = g.taylor()
    out[0] = 0.0
    return TruncatedPowerSeries(out, 0.0, 0, n, g.depth)


def evaluate(s: TruncatedPowerSeries, z):
    """Horner evaluation at a scalar or array of points.

    Raises :class:`SeriesOverflowError` instead of returning inf/nan.
    """
    z_arr = np.asarray(z, dtype=np.complex128)
    w = z_arr - s.center
    c = s.coeffs
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        acc = np.full(w.shape, c[-1], dtype=np.complex128)
        for ck in c[-2::-1]:
            acc = acc * w + ck
        if s.low_order != 0:
            acc = acc * w ** s.low_order
    if not np.all(np.isfinite(acc)):
        raise SeriesOverflowError("series evaluation overflowed")
    if acc.ndim == 0:
        return complex(acc)
    return acc


# -- radius of convergence ----------------------------------------------

@dataclass(frozen=True)
class RadiusEstimate:
    radius: float
    method: str
    exponent: float | None = None
    diagnostics: dict = field(default_factory=dict)


_METHODS = ("ratio", "cauchy_hadamard", "domb_sykes")


def _nonzero_indices(c: np.ndarray) -> np.ndarray:
    mag = np.abs(c)
    idx = []
    for k in range(1, c.size):
        neigh = max(mag[k - 1], mag[k + 1] if k + 1 < c.size else 0.0)
        if mag[k] > 0 and mag[k] > _LOCAL_ZERO * neigh:
            idx.append(k)
    return np.array(idx, dtype=int)


def _window(n: int) -> int:
    return max(4, math.ceil(n / 4))


def estimate_radius(s: TruncatedPowerSeries, method: str = "ratio",
                    window: int | None = None) -> RadiusEstimate:
    """Estimate the radius of convergence from the trailing coefficients.

    ``ratio``           root-ratio between consecutive nonzero coefficients,
                        Richardson-extrapolated (fit r_k = R + b/k) over the
                        last ceil(N/4) ratios.
    ``cauchy_hadamard`` least-squares fit of log|c_k| = alpha + beta*log k
                        - k*log R over the upper envelope of the trailing half.
    ``domb_sykes``      linear fit of c_k/c_{k-1} against 1/k; also returns
                        the exponent g of the nearest singularity, modelled
                        as (1 - z/z0)**g.
    """
    if method not in _METHODS:
        raise PreconditionError(f"unknown method {method!r}; expected one of {_METHODS}")
    _require_taylor(s)
    c = s.taylor()
    if c.size < 20:
        raise PreconditionError("radius estimation needs at least 20 coefficients")
    nz = _nonzero_indices(c)
    if nz.size < 10:
        raise PreconditionError("too few nonzero coefficients for a radius estimate")
    if method == "ratio":
        return _ratio(c, nz, window)
    if method == "cauchy_hadamard":
        return _cauchy_hadamard(c, nz, window)
    return _domb_sykes(c, nz, window)


def _ratio(c, nz, window) -> RadiusEstimate:
    mag = np.abs(c)
    k = nz[1:]
    gaps = np.diff(nz)
    r = (mag[nz[:-1]] / mag[k]) ** (1.0 / gaps)
    m = min(window or _window(r.size), r.size)
    kw, rw = k[-m:].astype(float), r[-m:]
    design = np.column_stack([np.ones(m), 1.0 / kw])
    (radius, slope), *_ = np.linalg.lstsq(design, rw, rcond=None)
    fit = design @ np.array([radius, slope])
    spread = float(np.sqrt(np.mean((rw - fit) ** 2)) / max(abs(radius), 1e-300))
    diag = {
        "last_ratio": float(r[-1]),
        "window": int(m),
        "fit_slope": float(slope),
        "relative_scatter": spread,
        "converged": bool(spread < 0.02 and radius > 0),
    }
    if radius <= 0:
        radius = float(np.median(rw))
        diag["fallback"] = "median"
    return RadiusEstimate(float(radius), "ratio", None, diag)


def _upper_hull(ks: np.ndarray, ls: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    hull: list[tuple[float, float]] = []
    for k, l in zip(ks, ls):
        while len(hull) >= 2:
            (k1, l1), (k2, l2) = hull[-2], hull[-1]
            if (l2 - l1) * (k - k1) <= (l - l1) * (k2 - k1):
                hull.pop()
            else:
                break
        hull.append((float(k), float(l)))
    arr = np.array(hull)
    return arr[:, 0], arr[:, 1]


def _cauchy_hadamard(c, nz, window) -> RadiusEstimate:
    # limsup |c_k|^(1/k) read off the upper concave hull of log|c_k| over the
    # trailing half; the hull discards the dips of oscillating or lacunary
    # coefficient sequences.  With enough hull points a log k term absorbs
    # the algebraic prefactor k^beta of the nearest singularity.
    m = window or int(np.count_nonzero(nz >= nz[-1] // 2))
    m = max(min(m, nz.size), 8)
    ks = nz[-m:]
    hk, hl = _upper_hull(ks, np.log(np.abs(c[ks])))
    beta = None
    target = hl
    if hk.size >= 12:
        design = np.column_stack([np.ones(hk.size), np.log(hk), hk])
        (_, beta, slope), *_ = np.linalg.lstsq(design, hl, rcond=None)
        beta = float(beta)
        if abs(beta) > _MAX_POWER:
            # log k and k are nearly collinear on a short window; irregular
            # hull heights (beating between equal-modulus singularities) can
            # push beta far outside the algebraic range, so hold it at the bound
            beta = math.copysign(_MAX_POWER, beta)
            target = hl - beta * np.log(hk)
            design = np.column_stack([np.ones(hk.size), hk])
            (_, slope), *_ = np.linalg.lstsq(design, target, rcond=None)
    elif hk.size >= 2:
        design = np.column_stack([np.ones(hk.size), hk])
        (_, slope), *_ = np.linalg.lstsq(design, hl, rcond=None)
    else:
        slope = hl[0] / hk[0]
        design = None
    fit = design @ np.linalg.lstsq(design, target, rcond=None)[0] if design is not None else hl
    hl = target
    diag = {
        "naive_root_test": float(np.min(np.abs(c[ks]) ** (-1.0 / ks))),
        "power_exponent": beta,
        "window": int(m),
        "hull_points": int(hk.size),
        "residual_rms": float(np.sqrt(np.mean((hl - fit) ** 2))),
    }
    radius = math.exp(-slope) if -700 < slope < 700 else (math.inf if slope <= -700 else 0.0)
    diag["converged"] = bool(np.isfinite(radius) and radius > 0 and diag["residual_rms"] < 0.5)
    return RadiusEstimate(float(radius), "cauchy_hadamard", None, diag)


def _domb_sykes(c, nz, window) -> RadiusEstimate:
    contiguous = np.all(np.diff(nz[-(window or _window(nz.size)) - 1 :]) == 1)
    k = nz[1:]
    prev = nz[:-1]
    mask = (k - prev) == 1
    k, prev = k[mask], prev[mask]
    ratios = c[k] / c[prev]
    m = min(window or _window(ratios.size), ratios.size)
    kw, rw = k[-m:].astype(float), ratios[-m:]
    design = np.column_stack([np.ones(m), 1.0 / kw]).astype(np.complex128)
    (inv_z0, slope), *_ = np.linalg.lstsq(design, rw, rcond=None)
    fit = design @ np.array([inv_z0, slope])
    scatter = float(np.sqrt(np.mean(np.abs(rw - fit) ** 2)) / max(abs(inv_z0), 1e-300))
    radius = 1.0 / abs(inv_z0) if inv_z0 != 0 else math.inf
    # c_k/c_{k-1} ~ (1/z0) (1 - (1 + g)/k) for (1 - z/z0)**g
    exponent = float((-(slope / inv_z0) - 1.0).real) if inv_z0 != 0 else None
    diag = {
        "singularity": complex(1.0 / inv_z0) if inv_z0 != 0 else None,
        "window": int(m),
        "relative_scatter": scatter,
        "contiguous": bool(contiguous),
        "converged": bool(scatter < 0.02 and contiguous),
    }
    return RadiusEstimate(float(radius), "domb_sykes", exponent, diag)


def reliable_radius(s: TruncatedPowerSeries, tol: float = 1e-13, tail: int = 4) -> float:
    """Largest r at which the last ``tail`` terms stay below ``tol`` times the
    largest term, i.e. where truncation is invisible at double precision."""
    c = np.abs(s.taylor())
    ks = np.nonzero(c)[0]
    if ks.size == 0 or ks[-1] < 1:
        return math.inf
    logc = np.full(c.size, -np.inf)
    logc[ks] = np.log(c[ks])
    kk = np.arange(c.size)
    tail_idx = kk[-tail:]

    def ok(logr: float) -> bool:
        terms = logc + kk * logr
        return np.max(terms[tail_idx]) <= math.log(tol) + np.max(terms)

    lo, hi = -50.0, 50.0
    if ok(hi):
        return math.inf
    if not ok(lo):
        return 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return math.exp(lo)


# -- CSV coefficient dump ------------------------------------------------

def to_csv(s: TruncatedPowerSeries) -> str:
    """Header ``k,re,im`` then one row per coefficient, 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "re", "im"])
    for i, ck in enumerate(s.coeffs):
        w.writerow([s.low_order + i, f"{ck.real + 0.0:.17g}", f"{ck.imag + 0.0:.17g}"])
    return buf.getvalue()


def from_csv(text: str, center: complex = 0.0) -> TruncatedPowerSeries:
    rows = list(csv.reader(io.StringIO(text)))
    if rows and rows[0] == ["k", "re", "im"]:
        rows = rows[1:]
    if not rows:
        raise PreconditionError("empty coefficient table")
    ks = [int(r[0]) for r in rows]
    if ks != list(range(ks[0], ks[0] + len(ks))):
        raise PreconditionError("coefficient rows must have consecutive k")
    vals = [complex(float(r[1]), float(r[2])) for r in rows]
    return TruncatedPowerSeries(vals, center=center, low_order=ks[0])


def from_polynomial(coeffs: Sequence[complex], order: int,
                    center: complex = 0.0) -> TruncatedPowerSeries:
    """Polynomial sum coeffs[k] (z-center)^k truncated/padded to ``order``."""
    return TruncatedPowerSeries(list(coeffs) or [0.0], center=center, trunc_order=order)
