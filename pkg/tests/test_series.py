import cmath
import math
from fractions import Fraction

import mpmath
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from hischwarz.errors import BasePointMismatch, CompositionMismatch, InsufficientTruncation, OrderError, ZeroConstantTerm
from hischwarz.quasimodular import eisenstein_q
from hischwarz.series import (
    Jet,
    QSeries,
    exp_jet,
    jet_add,
    jet_compose,
    jet_derive,
    jet_from_json,
    jet_from_qseries,
    jet_inverse,
    jet_mul,
    jet_reciprocal,
    qseries_add,
    qseries_eval,
    qseries_from_json,
    qseries_mul,
    qseries_theta,
    to_json,
)

u = sp.symbols("u")


def sympy_jet(expr, order):
    """Taylor coefficients at 0 as Fractions, computed by sympy."""
    poly = sp.series(expr, u, 0, order + 1).removeO()
    return [Fraction(str(sp.nsimplify(poly.coeff(u, k)))) for k in range(order + 1)]


def F(*xs):
    return [Fraction(x) for x in xs]


# --- jet arithmetic, worked examples ------------------------------------------


def test_add_examples():
    assert jet_add(Jet([1, 1]), Jet([1, -1])).coeffs == (2, 0)
    a = Jet(F(1, 2, 3))
    assert (a + Jet.constant(0, 2)).coeffs == a.coeffs
    assert (exp_jet(4) + exp_jet(4)).coeffs == tuple(Fraction(2, math.factorial(k)) for k in range(5))


def test_mul_examples():
    assert jet_mul(Jet([1, 1, 0]), Jet([1, -1, 0])).coeffs == (1, 0, -1)
    assert (exp_jet(3) * exp_jet(3)).coeffs == tuple(F(1, 2, 2, Fraction(4, 3)))
    a = Jet(F(3, -1, 5))
    assert (a * Jet.constant(1, 2)).coeffs == a.coeffs


def test_reciprocal_examples():
    assert jet_reciprocal(Jet([1, -1, 0, 0])).coeffs == (1, 1, 1, 1)
    assert jet_reciprocal(exp_jet(3)).coeffs == tuple(F(1, -1, Fraction(1, 2), Fraction(-1, 6)))
    # (e^u - 1)/u has coefficients 1/(k+1)!
    q = Jet([Fraction(1, math.factorial(k + 1)) for k in range(5)])
    expected = sympy_jet(u / (sp.exp(u) - 1), 4)
    assert list(jet_reciprocal(q).coeffs) == expected
    assert expected == F(1, Fraction(-1, 2), Fraction(1, 12), 0, Fraction(-1, 720))


def test_reciprocal_zero_constant():
    with pytest.raises(ZeroConstantTerm):
        jet_reciprocal(Jet([0, 1, 2]))
    with pytest.raises(ZeroConstantTerm):
        jet_reciprocal(Jet([1e-20, 1.0, 1.0]))


def test_derive_examples():
    d = jet_derive(Jet(F(0, 0, 1, 0)))
    assert d.coeffs == (0, 2, 0) and d.order == 2
    assert jet_derive(exp_jet(5)).coeffs == exp_jet(4).coeffs
    assert jet_derive(Jet(F(1, 3, 5))).coeffs == (3, 10)
    with pytest.raises(OrderError):
        jet_derive(Jet([1]))


def test_compose_examples():
    two_u = Jet(F(0, 2, 0, 0, 0))
    assert jet_compose(exp_jet(4), two_u).coeffs == tuple(Fraction(2**k, math.factorial(k)) for k in range(5))
    outer = Jet(F(3, 1, 4, 1, 5))
    assert jet_compose(outer, Jet.variable(4)).coeffs == outer.coeffs
    geo = Jet(F(1, 1, 1, 1))
    inner = Jet(F(0, 1, 1, 1))
    assert jet_compose(geo, inner).coeffs == (1, 1, 2, 4)


def test_compose_needs_matching_base():
    outer = Jet(F(1, 1, 1), base_point=Fraction(1))
    with pytest.raises(CompositionMismatch):
        jet_compose(outer, Jet(F(0, 1, 0)))
    # inner value equal to the outer base point is fine
    assert jet_compose(outer, Jet(F(1, 1, 0))).coeffs == (1, 1, 1)


def test_base_point_mismatch():
    with pytest.raises(BasePointMismatch):
        Jet([1, 2], Fraction(0)) + Jet([1, 2], Fraction(1))


def test_compose_against_sympy():
    outer = sp.sin(u) + u**2 / 3
    inner = u + u**2 - u**3 / 7
    lhs = jet_compose(Jet(sympy_jet(outer, 7)), Jet(sympy_jet(inner, 7)))
    assert list(lhs.coeffs) == sympy_jet(outer.subs(u, inner), 7)


def test_inverse_against_sympy():
    # the reversion of tan is atan
    w = Jet(sympy_jet(sp.tan(u), 9))
    assert list(jet_inverse(w).coeffs) == sympy_jet(sp.atan(u), 9)


def test_float_reciprocal_against_mpmath():
    z0 = 0.3 + 0.2j
    j = exp_jet(8, z0, exact=False)
    inv = jet_reciprocal(j)
    for k, c in enumerate(inv.coeffs):
        expected = complex(mpmath.exp(-mpmath.mpc(z0)) * (-1) ** k / mpmath.factorial(k))
        assert abs(c - expected) <= 1e-13 * abs(expected)


# --- ring laws ---------------------------------------------------------------

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)
jets = st.lists(fractions, min_size=6, max_size=6).map(Jet)
units = st.tuples(fractions.filter(lambda x: x != 0), st.lists(fractions, min_size=5, max_size=5)).map(
    lambda t: Jet([t[0]] + t[1]))


@settings(max_examples=60, deadline=None)
@given(jets, jets, jets)
def test_ring_laws(a, b, c):
    assert (a + b).coeffs == (b + a).coeffs
    assert (a * b).coeffs == (b * a).coeffs
    assert ((a * b) * c).coeffs == (a * (b * c)).coeffs
    assert (a * (b + c)).coeffs == (a * b + a * c).coeffs
    assert (jet_derive(a * b)).coeffs == (jet_derive(a) * b.truncate(4) + a.truncate(4) * jet_derive(b)).coeffs


@settings(max_examples=60, deadline=None)
@given(units)
def test_reciprocal_is_inverse(a):
    assert (a * jet_reciprocal(a)).coeffs == (1, 0, 0, 0, 0, 0)


@settings(max_examples=40, deadline=None)
@given(jets, units)
def test_compose_with_inverse(outer, w):
    w = Jet((0,) + w.coeffs[:5])
    inv = jet_inverse(w)
    assert jet_compose(w, inv).coeffs == Jet.variable(5).coeffs
    # chain rule
    lhs = jet_derive(jet_compose(outer, w))
    rhs = jet_compose(jet_derive(outer), w.truncate(4)) * jet_derive(w)
    assert lhs.coeffs == rhs.coeffs


def test_orders_follow_the_minimum():
    a, b = Jet(F(1, 2, 3, 4)), Jet(F(1, 2))
    assert (a + b).order == 1 and (a * b).order == 1


# --- q-series ----------------------------------------------------------------


def test_qseries_examples():
    assert qseries_mul(QSeries([1, -24]), QSeries([1, 240])).coeffs == (1, 216)
    s = QSeries([1, 5, 7])
    assert qseries_mul(s, QSeries([1, 0, 0])).coeffs == s.coeffs
    assert qseries_add(QSeries([1, 1]), QSeries([1, -1])).coeffs == (2, 0)
    assert qseries_theta(QSeries([1, 1, 1])).coeffs == (0, 1, 2)
    assert qseries_theta(QSeries([7, 0, 0])).coeffs == (0, 0, 0)
    assert qseries_theta(QSeries([1, 240, 2160])).coeffs == (0, 240, 4320)


def test_qseries_eval_examples():
    r = qseries_eval(QSeries([1, 0, 0]), 0.3 + 1.1j)
    assert r.value == 1 and r.tail == 0
    # a two-term series is treated as a truncation, so skip the refusal check
    r = qseries_eval(QSeries([0, 1]), 1j, tol=None)
    assert abs(r.value - math.exp(-2 * math.pi)) < 1e-18
    assert abs(r.value - 0.00186744) < 1e-8


def e4_at_i():
    return 3 * mpmath.gamma(0.25) ** 8 / (2 * mpmath.pi) ** 6


def test_e4_at_i():
    ref = float(e4_at_i())
    assert abs(ref - 1.4557628922687093) < 1e-15
    v = qseries_eval(eisenstein_q("E4", 40), 1j, 4)
    assert abs(v.value - ref) < 1e-12
    assert v.tail < 1e-12
    # stable as the order grows
    assert abs(qseries_eval(eisenstein_q("E4", 80), 1j, 4).value - v.value) < 1e-14


def test_e2_at_i():
    # E2(i) = 3/pi
    v = qseries_eval(eisenstein_q("E2", 40), 1j, 2).value
    assert abs(v - 3 / math.pi) < 1e-13


def test_eval_refuses_low_points():
    with pytest.raises(InsufficientTruncation):
        qseries_eval(eisenstein_q("E4", 10), 0.05j, 4)


def test_jet_from_qseries_examples():
    c = jet_from_qseries(QSeries([5, 0, 0]), 1j, 3)
    assert c.coeffs[0] == 5 and all(x == 0 for x in c.coeffs[1:])
    j = jet_from_qseries(QSeries([0, 1]), 1j, 2, tol=None)
    q = math.exp(-2 * math.pi)
    tau = 2j * math.pi
    for got, want in zip(j.coeffs, [q, tau * q, tau**2 * q / 2]):
        assert abs(got - want) <= 1e-15 * abs(want)


def test_e2_derivative_by_finite_differences():
    e2 = eisenstein_q("E2", 40)
    z0 = 2j
    c1 = jet_from_qseries(e2, z0, 1, 2).coeffs[1]
    h = 1e-6
    ev = lambda z: qseries_eval(e2, z, 2).value
    fd = (ev(z0 + h) - ev(z0 - h)) / (2 * h)
    assert abs(c1 - fd) <= 1e-8 * abs(c1)
    # c_1 / (2 pi i) is the theta series
    theta = qseries_eval(qseries_theta(e2), z0, 4).value
    assert abs(c1 / (2j * math.pi) - theta) <= 1e-13 * abs(theta)


def test_jet_from_qseries_matches_mpmath_taylor():
    s = eisenstein_q("E6", 40)
    z0 = 0.1 + 1.3j
    f = lambda z: sum(int(a) * mpmath.exp(2j * mpmath.pi * n * z) for n, a in enumerate(s.coeffs))
    ref = mpmath.taylor(f, mpmath.mpc(z0.real, z0.imag), 4)
    got = jet_from_qseries(s, z0, 4, 6).coeffs
    for a, b in zip(got, ref):
        assert abs(a - complex(b)) <= 1e-9 * max(1.0, abs(complex(b)))


# --- exp jet and JSON --------------------------------------------------------


def test_exp_jet():
    assert exp_jet(3).coeffs == tuple(F(1, 1, Fraction(1, 2), Fraction(1, 6)))
    j = exp_jet(3, 0.5, exact=False)
    assert abs(j.coeffs[2] - cmath.exp(0.5) / 2) < 1e-15


def test_json_round_trip():
    a = Jet(F(1, Fraction(-2, 3), 5), Fraction(1, 3))
    assert jet_from_json(to_json(a)).coeffs == a.coeffs
    assert jet_from_json(to_json(a)).base_point == Fraction(1, 3)
    b = Jet([1 + 2j, 0.5, -1e-300], 0.2 + 1j)
    back = jet_from_json(to_json(b))
    assert back.coeffs == b.coeffs and back.base_point == b.base_point
    s = eisenstein_q("E6", 5)
    assert qseries_from_json(to_json(s)).coeffs == s.coeffs
