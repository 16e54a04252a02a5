import cmath
import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from imsp import series as ps
from imsp.conjugation import (
    RecurrenceSpec,
    build_transseries,
    composition_defect,
    constant_of_motion,
    eval_embedding,
    eval_q_continued,
    initial_condition_to_C,
    nonresonance_check,
    orbit,
    riccati_closed_form,
    solve_poincare,
    verify_riccati,
)
from imsp.errors import DomainError, PreconditionError

from oracles import rational_taylor

unit = st.floats(-2, 2, allow_nan=False)
cubic = st.tuples(st.builds(complex, unit, unit), st.builds(complex, unit, unit))
angle = st.floats(0, 2 * math.pi)


# -- RecurrenceSpec -----------------------------------------------------------

def test_spec_forms():
    spec = RecurrenceSpec.logistic(0.5)
    assert spec.nonlinearity == (-0.5,)
    assert spec.G(0.3) == pytest.approx(0.5 * 0.3 * 0.7)
    assert spec.F(0.3) == pytest.approx(-0.5 * 0.09)
    r = RecurrenceSpec.riccati(0.5, 2.0, 4)
    assert np.allclose(r.nonlinearity, [-1.0, 2.0, -4.0])  # a x (1 - c x + c^2 x^2 - ...)
    with pytest.raises(PreconditionError):
        RecurrenceSpec(0.0)


# -- solve_poincare -------------------------------------------------------------

def test_linear_map_is_its_own_linearization():
    pm = solve_poincare(RecurrenceSpec(0.4), 20)
    z = ps.TruncatedPowerSeries.variable(20)
    assert np.array_equal(pm.phi.coeffs, z.coeffs)
    assert np.array_equal(pm.q.coeffs, z.coeffs)
    assert pm.defect_norm == 0


@pytest.mark.parametrize("a", [0.2, 0.5, 0.7, -0.3, 0.4 + 0.3j])
def test_logistic_phi2(a):
    pm = solve_poincare(RecurrenceSpec.logistic(a), 10)
    assert pm.phi[0] == 0 and pm.phi[1] == 1
    assert pm.phi[2] == pytest.approx(1 / (1 - a), rel=1e-15)


def test_logistic_half_phi2_is_two():
    assert solve_poincare(RecurrenceSpec.logistic(0.5), 10).phi[2] == pytest.approx(2.0)


@pytest.mark.parametrize("a,c", [(0.5, 1.0), (0.3 + 0.2j, -0.7), (-0.6, 0.25)])
def test_riccati_phi_is_mobius(a, c):
    order = 20
    pm = solve_poincare(RecurrenceSpec.riccati(a, c, order), order)
    # z / (1 + c z / (a - 1))
    ref = rational_taylor([0, 1], [1, c / (a - 1)], order)
    assert np.max(np.abs(pm.phi.coeffs - ref)) < 1e-10


def test_poincare_preconditions():
    with pytest.raises(PreconditionError, match=r"\|a\| < 1"):
        solve_poincare(RecurrenceSpec.logistic(1.5), 10)
    with pytest.raises(PreconditionError):
        solve_poincare(RecurrenceSpec.logistic(1.0), 10)
    with pytest.raises(PreconditionError):
        solve_poincare(RecurrenceSpec.logistic(0.5), 1)


def test_small_divisor_warning():
    with pytest.warns(RuntimeWarning, match="small divisor"):
        pm = solve_poincare(RecurrenceSpec(1 - 1e-7, (-0.1,)), 4)
    assert pm.min_small_divisor < 1e-6
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        solve_poincare(RecurrenceSpec.logistic(0.5), 10)


def test_q_is_inverse_of_phi():
    pm = solve_poincare(RecurrenceSpec.logistic(0.5), 64)
    ident = ps.TruncatedPowerSeries.variable(64)
    assert composition_defect(pm.q, pm.phi, ident) < 1e-14
    assert pm.q_defect_norm < 1e-14


def test_q_radius_matches_repelling_fixed_point():
    # the nearest point of the Julia set for the logistic map with a in (0, 1)
    # is the repelling fixed point 1 - 1/a
    for a in (0.5, 0.7):
        pm = solve_poincare(RecurrenceSpec.logistic(a), 200)
        assert pm.q_radius == pytest.approx(abs(1 - 1 / a), rel=0.01)


@given(cubic, st.sampled_from([0.3, 0.5, 0.9]), angle)
def test_conjugation_defect(fs, modulus, theta):
    a = modulus * cmath.exp(1j * theta)
    pm = solve_poincare(RecurrenceSpec(a, fs), 40)
    assert pm.defect_norm < 1e-11


@given(cubic, st.sampled_from([0.3, 0.5, 0.9]), angle)
def test_defect_recomputed_independently(fs, modulus, theta):
    # phi(a z) - a phi(z) - F(phi(z)) via numpy polynomial arithmetic
    a = modulus * cmath.exp(1j * theta)
    n = 25
    pm = solve_poincare(RecurrenceSpec(a, fs), n)
    phi = pm.phi.coeffs
    P = np.polynomial.polynomial
    lhs = phi * a ** np.arange(n + 1)

    def power(k):
        out = np.zeros(n + 1, dtype=complex)
        full = P.polypow(phi, k)[: n + 1]
        out[: full.size] = full
        return out

    f_phi = fs[0] * power(2) + fs[1] * power(3)
    resid = lhs - a * phi - f_phi
    assert np.max(np.abs(resid)) < 1e-11 * np.max(np.abs(phi))


# -- transseries / embedding ----------------------------------------------------------

def test_transseries_linear_and_logistic():
    ts = build_transseries(solve_poincare(RecurrenceSpec(0.5), 10), 0.2)
    assert ts.D.tolist() == [1] + [0] * 9
    pm = solve_poincare(RecurrenceSpec.logistic(0.5), 30)
    ts = build_transseries(pm, 0.1)
    assert ts.D[1] == pytest.approx(2.0)
    # D_k are phi's coefficients, same memory
    assert np.shares_memory(ts.D, pm.phi.coeffs)
    assert np.array_equal(ts.D, pm.phi.coeffs[1:])


def test_transseries_partial_sum_matches_phi():
    pm = solve_poincare(RecurrenceSpec.logistic(0.5), 64)
    C = 0.05
    ts = build_transseries(pm, C)
    for n in range(0, 15):
        X = C * 0.5 ** n
        assert abs(X) < pm.radius_estimate / 2
        assert eval_embedding(ts, n) == pytest.approx(ps.evaluate(pm.phi, X), abs=1e-10)


def test_embedding_zero_and_periodicity():
    pm = solve_poincare(RecurrenceSpec.logistic(0.5 + 0.2j), 64)
    assert eval_embedding(build_transseries(pm, 0), 3.3) == 0
    ts = build_transseries(pm, 0.05)
    z = 2.3 + 0.4j
    period = 2j * math.pi / ts.log_a
    assert eval_embedding(ts, z) == pytest.approx(eval_embedding(ts, z + period), abs=1e-12)


def test_embedding_domain_guard():
    pm = solve_poincare(RecurrenceSpec.logistic(0.5), 64)
    ts = build_transseries(pm, 0.05)
    with pytest.raises(DomainError):
        eval_embedding(ts, -20)
    assert ts.sector_bound() == pytest.approx(math.log(ts.domain_radius / 0.05))


@given(st.floats(0.2, 0.9), angle, st.floats(0.05, 0.49), angle, st.integers(5, 25))
def test_embedding_agreement(modulus, theta, frac, carg, n):
    a = modulus * cmath.exp(1j * theta)
    pm = solve_poincare(RecurrenceSpec.logistic(a), 64)
    C = frac * pm.phi_domain() * cmath.exp(1j * carg)
    ts = build_transseries(pm, C)
    x0 = complex(ps.evaluate(pm.phi, C))
    direct = orbit(pm.spec, x0, n)[-1]
    via_phi = complex(ps.evaluate(pm.phi, C * a ** n))
    via_ts = eval_embedding(ts, n)
    assert abs(via_ts - via_phi) < 1e-9
    assert abs(via_ts - direct) < 1e-9
    assert abs(via_phi - direct) < 1e-9


# -- constant of motion ----------------------------------------------------------------

def test_constant_of_motion_examples():
    pm = solve_poincare(RecurrenceSpec.logistic(0.5), 64)
    assert constant_of_motion(pm, 0, 5) == 0
    lin = solve_poincare(RecurrenceSpec(0.5), 10)
    assert constant_of_motion(lin, 0.3, 4) == pytest.approx(0.3 * 16)
    with pytest.raises(DomainError):
        constant_of_motion(pm, 5.0, 0)


def test_initial_condition_to_C_roundtrip():
    pm = solve_poincare(RecurrenceSpec.logistic(0.5), 64)
    C = initial_condition_to_C(pm, 0.1)
    assert ps.evaluate(pm.phi, C) == pytest.approx(0.1, abs=1e-14)


@given(st.floats(0.2, 0.9), angle, cubic, st.floats(0.01, 0.5), angle)
def test_constant_of_motion_invariance(modulus, theta, fs, frac, xarg):
    a = modulus * cmath.exp(1j * theta)
    pm = solve_poincare(RecurrenceSpec(a, fs), 64)
    rho = min(pm.q_domain(), 1.0)
    x0 = frac * rho * cmath.exp(1j * xarg)
    xs = orbit(pm.spec, x0, 20)
    C0 = constant_of_motion(pm, xs[0], 0)
    for n, x in enumerate(xs):
        if abs(x) < rho:
            assert abs(constant_of_motion(pm, x, n) - C0) <= 1e-8 * abs(C0)


def test_q_continued_agrees_with_series():
    pm = solve_poincare(RecurrenceSpec.logistic(0.5), 200)
    z = np.array([0.2, -0.3j, 0.5 + 0.2j])
    assert np.allclose(eval_q_continued(pm, z), ps.evaluate(pm.q, z), atol=1e-13)
    # beyond the disk: Q(G(x)) = a Q(x)
    x = np.array([1.5 + 0.3j, 1.9])
    assert np.allclose(eval_q_continued(pm, pm.spec.G(x)), 0.5 * eval_q_continued(pm, x))
    assert np.isnan(eval_q_continued(pm, 10.0)[0])


# -- Riccati ---------------------------------------------------------------------------

def test_riccati_examples():
    rep = verify_riccati(0.5, 1, 0.1, 30)
    assert rep.status == "ok" and rep.max_rel_error < 1e-12
    lin = verify_riccati(0.7, 0, 0.2, 25)
    assert lin.max_rel_error < 1e-15
    assert riccati_closed_form(0.7, 0, 0.2, 5) == pytest.approx(0.7 ** 5 * 0.2, rel=1e-15)
    assert riccati_closed_form(0.5, 1, 0.1, 0) == pytest.approx(0.1, rel=1e-15)
    cplx = verify_riccati(0.3 + 0.2j, -0.7, 0.05, 30)
    assert cplx.max_rel_error < 1e-12


def test_riccati_pole_and_guards():
    rep = verify_riccati(0.5, 1.0, -1.0, 10)  # 1 + c x0 = 0
    assert rep.status == "pole" and rep.pole_index == 0
    with pytest.raises(PreconditionError):
        verify_riccati(1.0, 1.0, 0.1, 5)
    with pytest.raises(PreconditionError):
        verify_riccati(0.5, 1.0, 0.0, 5)


def test_riccati_json_schema():
    doc = verify_riccati(0.5, 1, 0.1, 30).to_json()
    assert set(doc) == {"inputs", "max_rel_error", "status", "pole_index"}
    json.dumps(doc)


@given(st.floats(0.1, 0.95), angle, st.floats(0, 0.9), angle, st.floats(0.01, 1), angle,
       st.integers(0, 30))
def test_riccati_error_bounded(modulus, theta, ufrac, uarg, xmod, xarg, n):
    # u = c x stays inside |u| <= 1 - |a|, far from the pole u = -1
    a = modulus * cmath.exp(1j * theta)
    x0 = xmod * cmath.exp(1j * xarg)
    u0 = ufrac * (1 - modulus) * cmath.exp(1j * uarg)
    rep = verify_riccati(a, u0 / x0, x0, n)
    assert rep.status == "ok"
    assert rep.max_rel_error < 1e-10


# -- nonresonance -----------------------------------------------------------------------

def test_nonresonance_examples():
    assert nonresonance_check([math.log(2)], 50)
    res = nonresonance_check([1.0, 2.0], 10)
    assert not res and res.witness == (2, 0) and res.component == 1
    assert nonresonance_check([1.0, math.pi], 20)
    doc = res.to_json()
    assert set(doc) == {"inputs", "witness", "status"} and doc["status"] == "resonant"


def test_nonresonance_mod_2pi_i():
    # mu_2 = 2 mu_1 + 2 pi i resonates modulo 2 pi i
    res = nonresonance_check([0.5, 1.0 + 2j * math.pi], 5)
    assert not res and res.witness == (2, 0)


def test_nonresonance_requires_input():
    with pytest.raises(PreconditionError):
        nonresonance_check([], 5)
