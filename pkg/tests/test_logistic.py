import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from imsp import series as ps
from imsp.errors import NumericalError, PreconditionError
from imsp.logistic import (
    PoleError,
    analyze_z1,
    build_rational_iterate,
    classify_imsp,
    continue_F,
    continued_values,
    doubling_gap,
    explicit_solution,
    find_branch_point,
    functional_residual,
    iterate_identity_residual,
    iterate_logistic,
    leading_order_solution,
    locate_branch_point,
    q_functional_residual,
    solve_superstable,
    superstable_orbit,
)

from oracles import critical_orbit_bounded, logistic_superstable_low_order, rational_taylor

angle = st.floats(0, 2 * math.pi)


def ring(radius, n=32, phase=0.1):
    return radius * np.exp(1j * (np.linspace(0, 2 * math.pi, n, endpoint=False) + phase))


@st.composite
def bounded_parameter(draw):
    """a whose critical orbit stays bounded: |a| < 1, |a - 2| < 1 or real [-2, 4]."""
    kind = draw(st.sampled_from(["disk0", "disk2", "real"]))
    if kind == "real":
        a = complex(draw(st.floats(-2, 4)))
    else:
        r = 0.999 * math.sqrt(draw(st.floats(0, 1)))
        a = (2 if kind == "disk2" else 0) + r * cmath.exp(1j * draw(angle))
    assume(abs(a) >= 0.05)
    assume(all(abs(a - v) > 1e-6 for v in (-2, 2, 4)))
    return a


# -- iterate_logistic / leading order -----------------------------------------

def test_iterate_zero_and_duality():
    assert np.all(iterate_logistic(3.7, 0, 10) == 0)
    a, y0 = 2.9 + 0.1j, 0.3
    ys = iterate_logistic(a, y0, 5, "y")
    xs = iterate_logistic(a, 1 / y0, 5, "x")
    assert np.allclose(ys, 1 / xs, rtol=1e-12, atol=0)


def test_iterate_chebyshev_oracle():
    theta = 0.3
    xs = iterate_logistic(4, math.sin(theta) ** 2, 10)
    ref = np.sin(2.0 ** np.arange(11) * theta) ** 2
    assert np.max(np.abs(xs - ref)) < 1e-9


def test_iterate_pole_reported():
    with pytest.raises(PoleError) as exc:
        iterate_logistic(2, 1.0, 5, "y")
    assert exc.value.index == 0
    with pytest.raises(PreconditionError):
        iterate_logistic(2, 0.1, 5, "z")


def test_leading_order_solution():
    assert leading_order_solution(3, 0.01, 0) == pytest.approx(0.01)
    assert leading_order_solution(3, 0.01, 1) == pytest.approx(-0.01 ** 2 / 3)
    y = 0.01
    for n in range(7):
        got = leading_order_solution(3, 0.01, n)
        assert abs(got - y) <= 1e-14 * abs(y)
        if n >= 1:
            closed = -(0.01 ** (2 ** n)) * 3.0 ** (1 - 2 ** n)
            assert abs(got - closed) <= 1e-14 * abs(y)
        y = -y * y / 3
    with pytest.raises(NumericalError):
        leading_order_solution(0.5, 3.0, 20)


# -- solve_superstable ----------------------------------------------------------

@pytest.mark.parametrize("a", [3.2, 0.5 + 0.5j, -1.3, 6, 2 + 1j])
def test_low_order_coefficients(a):
    for method in ("matching", "contraction"):
        ss = solve_superstable(a, 20, method)
        assert ss.f[0] == 0 and ss.f[1] == -a
        assert np.allclose(ss.f.coeffs[1:4], logistic_superstable_low_order(a), rtol=1e-13, atol=0)
        assert ss.h[0] == 0 and ss.h[1] == 0
        assert np.array_equal(ss.h.coeffs[2:], ss.f.coeffs[2:])
        assert ss.residual_norm < 1e-13


def test_low_order_cross_checks():
    assert logistic_superstable_low_order(2)[1:] == (-2, -2)
    assert logistic_superstable_low_order(-2)[1:] == (-2, 0)


def test_explicit_coefficients():
    ss = solve_superstable(2, 50)
    assert np.allclose(ss.f.coeffs[1:], -2, atol=1e-11, rtol=0)
    ss = solve_superstable(4, 50)
    assert np.max(np.abs(ss.f.coeffs - (-4.0 * np.arange(51)))) < 1e-11
    ss = solve_superstable(-2, 50)
    ref = rational_taylor([0, 2], [1, 1, 1], 50)
    assert np.max(np.abs(ss.f.coeffs - ref)) < 1e-11


def test_solver_preconditions():
    with pytest.raises(PreconditionError):
        solve_superstable(0, 10)
    with pytest.raises(PreconditionError):
        solve_superstable(3, 2)
    with pytest.raises(PreconditionError):
        solve_superstable(3, 10, "newton")


@pytest.mark.parametrize("a", [-2, 0.5 + 0.5j, 2, 3.2, 4, 6])
def test_matching_and_contraction_agree(a):
    m = solve_superstable(a, 40, "matching")
    c = solve_superstable(a, 40, "contraction")
    assert np.max(np.abs(m.f.coeffs - c.f.coeffs)) < 1e-11


@given(st.floats(0.2, 6), angle)
def test_matching_and_contraction_agree_scaled(modulus, theta):
    # for |a| far from the bounded-orbit region c_k grows like 10^9 at k = 40,
    # so the agreement is measured relative to the largest coefficient
    a = modulus * cmath.exp(1j * theta)
    m = solve_superstable(a, 40, "matching")
    c = solve_superstable(a, 40, "contraction")
    scale = max(1.0, float(np.max(np.abs(m.f.coeffs))))
    assert np.max(np.abs(m.f.coeffs - c.f.coeffs)) < 1e-11 * scale


# -- explicit solutions ------------------------------------------------------------

def test_explicit_values():
    assert explicit_solution(2)(0.5) == pytest.approx(-2)
    assert explicit_solution(4)(-1) == pytest.approx(1)
    with pytest.raises(PreconditionError):
        explicit_solution(3)


def test_explicit_minus_two_functional_equation():
    F = explicit_solution(-2)
    rng = np.random.default_rng(7)
    z = 2 * np.sqrt(rng.uniform(0, 1, 100)) * np.exp(2j * math.pi * rng.uniform(0, 1, 100))
    res = -2 * F(z * z) * (F(z) - 1) - F(z) ** 2
    assert np.max(np.abs(res)) < 1e-12


@pytest.mark.parametrize("a", [-2, 2, 4])
def test_explicit_taylor_matches_series(a):
    ex = explicit_solution(a)
    assert np.max(np.abs(ex.taylor(50).coeffs - solve_superstable(a, 50).f.coeffs)) < 1e-11


# -- z = 1 analysis and classification ---------------------------------------------------

def test_analyze_z1_examples():
    z = analyze_z1(solve_superstable(2, 40))
    assert z.laurent_p == 1 and z.admissible
    z = analyze_z1(solve_superstable(4, 40))
    assert z.laurent_p == 2 and z.admissible
    z = analyze_z1(solve_superstable(3.2, 40))
    assert z.laurent_p is None and not z.admissible
    assert z.c0_branch == pytest.approx(3.2 / 2.2)
    z = analyze_z1(solve_superstable(-2, 40))
    assert z.analytic_k == 1 and z.admissible
    z = analyze_z1(solve_superstable(-6, 40))
    assert z.analytic_k == 2 and not z.admissible  # |a| > 5
    json.dumps(z.to_json())


def test_fixed_point_multiplier_matches_laurent_condition():
    # R'(a/(a-1)) = 2 - a
    for a in (3.2, 0.5 + 0.5j, -1.0):
        z = analyze_z1(solve_superstable(a, 20))
        assert z.multiplier_at_c0 == pytest.approx(2 - a)


@pytest.mark.parametrize("a", [-2, 0, 2, 4])
def test_classify_solvable(a):
    v = classify_imsp(a)
    assert v.verdict == "solvable"


def test_classify_evidence():
    v = classify_imsp(4)
    assert "(z-1)^2" in v.evidence["closed_form"]
    assert "no analysis" not in json.dumps(v.to_json())
    v = classify_imsp(0)
    assert v.verdict == "solvable" and "a = 0" in v.evidence["note"]
    v = classify_imsp(3.2)
    assert v.verdict == "barrier" and abs(v.evidence["radius"] - 1) < 0.05
    v = classify_imsp(6)
    assert v.evidence["branch_point"]["abs_z1"] < 1
    doc = v.to_json()
    assert set(doc) == {"a", "verdict", "evidence"}
    assert {"c0_branch", "laurent_p", "radius"} <= set(doc["evidence"])


@pytest.mark.parametrize("a", [0.5, -0.5, 1.5, 3, 3.2, 2.5, 4.5, 6, 2 + 1j,
                               2 + 1e-9, 4 - 1e-6, -2 + 1e-9j])
def test_classify_barrier(a):
    assert classify_imsp(a).verdict == "barrier"


def test_classify_locally_constant_near_three():
    rng = np.random.default_rng(11)
    r = 0.5 * np.sqrt(rng.uniform(0, 1, 20))
    for a in 3 + r * np.exp(2j * math.pi * rng.uniform(0, 1, 20)):
        assert classify_imsp(a, order=100).verdict == "barrier"


# -- radius dichotomy ----------------------------------------------------------------

@pytest.mark.parametrize("a", [-2, 2, 4])
def test_radius_of_closed_forms(a):
    assert solve_superstable(a, 200).radius_estimate == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("a", [3, 3.2, 0.5, -1.5, 2 + 0.5j])
def test_radius_near_one(a):
    assert 0.95 <= solve_superstable(a, 200).radius_estimate <= 1.05


@given(bounded_parameter())
def test_radius_dichotomy_for_bounded_critical_orbit(a):
    assert critical_orbit_bounded(a)
    assert 0.95 <= solve_superstable(a, 200).radius_estimate <= 1.05


@pytest.mark.parametrize("a,expected", [(4.5, 0.682), (6, 0.432)])
def test_radius_below_one_for_escaping_critical_orbit(a, expected):
    # the branch point found by the eps ladder sits strictly inside the disk
    assert not critical_orbit_bounded(a)
    ss = solve_superstable(a, 200)
    assert ss.radius_estimate == pytest.approx(expected, abs=0.01)
    cert = locate_branch_point(a, 128)
    assert abs(cert.z1) == pytest.approx(ss.radius_estimate, rel=0.02)


# -- continuation --------------------------------------------------------------------

def test_continue_inside_disk_is_direct():
    ss = solve_superstable(3.2, 200)
    z = ring(0.3, 8)
    got = continue_F(ss, z)
    assert all(cv.depth == 0 for cv in got)
    assert np.max(np.abs([cv.value for cv in got] - ps.evaluate(ss.f, z))) < 1e-10


def test_continue_matches_closed_form_a2():
    ss = solve_superstable(2, 64)
    z = ring(0.95)
    got = continue_F(ss, z)
    assert all(cv.depth >= 1 for cv in got)
    assert np.max(np.abs(np.array([cv.value for cv in got]) - 2 * z / (z - 1))) < 1e-8


def test_continue_functional_residual_a32():
    ss = solve_superstable(3.2, 200)
    z = ring(0.9)
    fz = continued_values(ss, z)
    fz2 = continued_values(ss, z * z)
    assert np.max(np.abs(3.2 * fz2 * (fz - 1) - fz ** 2)) < 1e-7


def test_continue_rejects_outside_unit_disk():
    ss = solve_superstable(3.2, 64)
    with pytest.raises(PreconditionError):
        continue_F(ss, [1.01])


# -- branch points ---------------------------------------------------------------------

def test_branch_point_a6():
    cert = find_branch_point(6)
    assert abs(cert.z1) < 1
    assert cert.monodromy_gap > 1e-3
    ss = solve_superstable(6, cert.order)
    assert abs(continued_values(ss, [cert.z1 ** 2])[0] - 4 / 6) < 1e-8
    assert cert.residual < 1e-8
    json.dumps(cert.to_json())


def test_branch_point_guard():
    with pytest.raises(PreconditionError):
        find_branch_point(4)
    with pytest.raises(PreconditionError):
        find_branch_point(-4j)


def test_branch_points_double():
    cert = find_branch_point(6)
    ss = solve_superstable(6, cert.order)
    for sign in (1, -1):
        z2, gap = doubling_gap(ss, cert.z1, sign)
        assert z2 * z2 == pytest.approx(cert.z1)
        assert abs(z2) < 1
        assert gap > 1e-3


def test_regular_point_has_no_monodromy():
    from imsp.logistic import monodromy_gap
    ss = solve_superstable(6, 128)
    gap, _, _ = monodromy_gap(ss, 0.3, 0.01)
    assert gap < 1e-8


# -- rational iterates -----------------------------------------------------------------

def test_rational_iterate_small_n():
    r0 = build_rational_iterate(3, 0)
    assert r0(0.7) == pytest.approx(0.7)
    assert np.allclose(r0.numer, [0, 1]) and np.allclose(r0.denom, [1])
    r1 = build_rational_iterate(0.7, 1)
    assert np.allclose(r1.numer, [0, 0, 1]) and np.allclose(r1.denom, [-0.7, 0.7])
    w = 0.3 + 0.2j
    assert r1(w) == pytest.approx(w * w / (0.7 * w - 0.7))


def test_rational_iterate_a2_closed_form():
    ss = solve_superstable(2, 64)
    ri = build_rational_iterate(2, 3)
    z = ring(0.3, 50)
    F = explicit_solution(2)
    assert np.max(np.abs(ri(F(z)) - F(z ** 8))) < 1e-9
    assert iterate_identity_residual(ss, ri, z) < 1e-9


def test_rational_iterate_expansion_guards():
    with pytest.raises(PreconditionError):
        build_rational_iterate(3, 13, expand=True)
    assert not build_rational_iterate(3, 13).expanded
    with pytest.raises(NumericalError):
        build_rational_iterate(3.2, 12, expand=True)
    assert not build_rational_iterate(3.2, 12).expanded
    assert build_rational_iterate(3.2, 4).expanded
    with pytest.raises(PreconditionError):
        build_rational_iterate(3, -1)


def test_expanded_form_agrees_for_small_n():
    ri = build_rational_iterate(3.2, 3)
    w = ring(0.2, 10)
    assert np.allclose(ri.eval_expanded(w), ri.compose_eval(w), rtol=1e-12)


@given(st.floats(0.3, 6), angle, st.integers(0, 6), st.floats(0.05, 0.5))
def test_rational_iterate_composition_identity(modulus, theta, n, frac):
    a = modulus * cmath.exp(1j * theta)
    ss = solve_superstable(a, 128)
    ri = build_rational_iterate(a, n)
    # consistency R_{n+1}(w) = R_n(R_1(w))
    w = np.array([0.1 + 0.05j, -0.2j])
    nxt = build_rational_iterate(a, n + 1)
    assert np.allclose(nxt(w), ri(build_rational_iterate(a, 1)(w)), rtol=1e-12)
    z = ring(frac * ss.safe_radius(), 50)
    assert iterate_identity_residual(ss, ri, z) < 1e-8


# -- inverse relation and substitution identity ----------------------------------------------

def test_q_relation_a2_closed_form():
    ss = solve_superstable(2, 100)
    z = ring(0.3, 50)
    assert np.max(np.abs(ps.evaluate(ss.q, z) - z / (z - 2))) < 1e-12
    assert q_functional_residual(ss, z) < 1e-12
    assert q_functional_residual(ss, [0.0]) == 0


def test_q_relation_a32():
    ss = solve_superstable(3.2, 200)
    assert q_functional_residual(ss, ring(0.09, 50)) < 1e-8


def test_q_relation_domain_guard():
    ss = solve_superstable(3.2, 200)
    with pytest.raises(PreconditionError):
        q_functional_residual(ss, [2.0])


def test_functional_residual_detects_wrong_series():
    good = solve_superstable(3.2, 40)
    assert functional_residual(3.2, good.f) < 1e-14
    assert functional_residual(3.3, good.f) > 1e-3


@given(bounded_parameter(), st.floats(0.01, 0.1), angle, st.integers(0, 8))
def test_substitution_identity(a, ymod, yarg, n):
    ss = solve_superstable(a, 128)
    y0 = ymod * min(1.0, abs(a)) * cmath.exp(1j * yarg)
    assume(abs(y0) < 0.9 * min(ss.q_radius, ps.reliable_radius(ss.q)))
    ys = iterate_logistic(a, y0, n, "y")
    assert abs(superstable_orbit(ss, y0, n) - ys[n]) < 1e-8


def test_substitution_leading_order():
    # zeta = Q(y0) ~ -y0/a, so F(y0^(2^n) a^(-2^n)) tracks y_n to leading order
    a, y0 = 3.2, 1e-3
    ss = solve_superstable(a, 64)
    for n in range(1, 4):
        z = (-y0 / a) ** (2 ** n)
        exact = iterate_logistic(a, y0, n, "y")[n]
        assert complex(ps.evaluate(ss.f, z)) == pytest.approx(exact, rel=2 ** n * 1e-2)
