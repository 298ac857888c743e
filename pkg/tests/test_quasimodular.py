import math
from fractions import Fraction

import numpy as np
import pytest

from hischwarz.errors import InhomogeneousError
from hischwarz.moebius import IDENTITY, S, word_to_matrix
from hischwarz.quasimodular import (
    E2,
    E4,
    E6,
    EXPECTED_KAPPA,
    ONE,
    OBSERVED_RELATIONS,
    SL2_RELATIONS,
    D_op,
    E_op,
    GradedPoly,
    adopted_kappa,
    commutator,
    component_transform_check,
    containment_ok,
    delta_op,
    e2_components,
    e2_squared_components,
    eisenstein_eval,
    eisenstein_q,
    extract_components,
    fit_e2_constant,
    fit_lambda,
    graded_depth,
    graded_qexp,
    graded_weight,
    modular_components,
    monomials,
    near_holomorphic_check,
    qm_transform_check,
    recognise_tau_multiple,
    sigma,
    sl2_commutator_check,
)
from hischwarz.sampling import admissible_maps, sample_cases
from hischwarz.series import TWO_PI_I, QSeries, qseries_theta


def divisor_sum(k, n):
    return sum(d**k for d in range(1, n + 1) if n % d == 0)


def samples(seed, n):
    return [(c.g, c.z) for c in sample_cases(np.random.default_rng(seed), n, 1)]


def test_sigma_examples():
    assert sigma(1, 1) == 1
    assert (sigma(1, 4), sigma(3, 2), sigma(5, 2)) == (7, 9, 33)
    assert sigma(0, 12) == 6
    for n in range(1, 60):
        assert sigma(3, n) == divisor_sum(3, n)


def test_eisenstein_examples():
    assert eisenstein_q("E2", 3).coeffs == (1, -24, -72, -96)
    assert eisenstein_q("E4", 2).coeffs == (1, 240, 2160)
    assert eisenstein_q("E6", 2).coeffs == (1, -504, -16632)
    with pytest.raises(ValueError):
        eisenstein_q("E8", 3)


def test_modular_transform():
    for g, z in samples(1, 30):
        assert qm_transform_check(modular_components("E4"), g, z) <= 1e-8
        assert qm_transform_check(modular_components("E6"), g, z) <= 1e-8
    assert qm_transform_check(modular_components("E4"), IDENTITY, 0.1 + 1.3j) < 1e-15


def test_kappa_fit():
    fit = fit_e2_constant(samples(2, 20))
    assert fit.dispersion <= 1e-8
    assert abs(fit.mean - EXPECTED_KAPPA) <= 1e-8
    single = fit_e2_constant([(S, 2j)])
    assert abs(single.mean - fit.mean) <= 1e-8
    k = adopted_kappa()
    assert (k.rational, k.tau_power) == (12, -1)
    assert abs(k.exact_value - 12 / TWO_PI_I) < 1e-15
    with pytest.raises(ValueError):
        fit_e2_constant([(word_to_matrix("T"), 1j)])


def test_recognise():
    assert recognise_tau_multiple(12 / TWO_PI_I) == (12, -1)
    assert recognise_tau_multiple(TWO_PI_I) == (1, 1)
    assert recognise_tau_multiple(-0.75 + 0j) == (Fraction(-3, 4), 0)
    with pytest.raises(ValueError):
        recognise_tau_multiple(math.e + 0j)


def test_e2_components():
    f = e2_components()
    for g, z in samples(3, 30):
        assert qm_transform_check(f, g, z) <= 1e-8
        assert component_transform_check(f, 0, g, z) == qm_transform_check(f, g, z)
        # the constant depth-1 component is weight 0 modular
        assert component_transform_check(f, 1, g, z) < 1e-15
    f2 = e2_squared_components()
    for g, z in samples(4, 20):
        assert qm_transform_check(f2, g, z) <= 1e-8
        for r in range(3):
            assert component_transform_check(f2, r, g, z) <= 1e-8


def test_wrong_kappa_fails():
    f = e2_components(kappa=EXPECTED_KAPPA * 1.001)
    g, z = samples(5, 1)[0]
    assert qm_transform_check(f, g, z) > 1e-6


def test_near_holomorphic():
    smp = samples(6, 10)
    lam, res = fit_lambda(e2_components(), smp)
    assert abs(lam - TWO_PI_I) < 1e-8 and res <= 1e-8
    # lambda kappa = 12 gives the classical completion E2 - 3/(pi y)
    assert abs(lam * adopted_kappa().numeric - 12) < 1e-8
    assert near_holomorphic_check(modular_components("E4"), 3.7 - 1j, *smp[0]) <= 1e-8
    assert near_holomorphic_check(e2_components(), lam, IDENTITY, 0.2 + 1.5j) < 1e-15
    assert near_holomorphic_check(e2_components(), 1.0, *smp[0]) > 1e-3
    lam2, res2 = fit_lambda(e2_squared_components(), smp)
    assert abs(lam2 - TWO_PI_I) < 1e-6 and res2 <= 1e-8


def test_graded_bookkeeping():
    p = E2 * E4
    assert (graded_weight(p), graded_depth(p)) == (6, 1)
    assert (graded_weight(ONE), graded_depth(ONE)) == (0, 0)
    assert graded_weight(GradedPoly()) == 0
    with pytest.raises(InhomogeneousError):
        graded_weight(E2 + E4)
    assert len(monomials(20)) == 67


def test_discriminant_qexp():
    q = graded_qexp(E4**3 - E6**2, 5)
    assert list(q) == [0]
    assert q[0].coeffs[:3] == (0, 1728, -41472)
    # 1728 q prod (1 - q^n)^24
    prod = QSeries([1, 0, 0, 0, 0, 0])
    for n in range(1, 6):
        factor = QSeries([1 if k == 0 else (-1 if k == n else 0) for k in range(6)])
        prod = prod * factor**24
    delta = QSeries([0] + list(prod.coeffs[:5])) * 1728
    assert q[0].coeffs == delta.coeffs


def test_D_against_qexp():
    assert graded_qexp(D_op(E4)) == {1: qseries_theta(eisenstein_q("E4", 40))}
    assert D_op(ONE) == GradedPoly()
    assert graded_weight(D_op(E2)) == 4 and graded_depth(D_op(E2)) == 2
    # a product rule check against q-series
    p = E2 * E6 * E4
    lhs = graded_qexp(D_op(p), 30)
    rhs = {1: qseries_theta(graded_qexp(p, 30)[0])}
    assert lhs == rhs


def test_D_against_finite_differences():
    z, h = 0.15 + 1.2j, 1e-5
    for p in (E2, E4 * E2, E6):
        fd = (p.evaluate(z + h) - p.evaluate(z - h)) / (2 * h)
        assert abs(D_op(p).evaluate(z) - fd) <= 1e-7 * abs(fd)


def test_delta_and_E():
    assert delta_op(E4) == GradedPoly()
    k = adopted_kappa()
    assert delta_op(E2) == GradedPoly.const(12, tau_power=-1)
    assert delta_op(E2 * E2) == E2 * GradedPoly.const(24, tau_power=-1)
    assert E_op(E4) == E4 * 4
    assert E_op(ONE) == GradedPoly()
    assert E_op(E2 * E6) == E2 * E6 * 8
    assert k.tau_power == -1


def test_delta_matches_extracted_component():
    # the depth-1 component of E2^2 is 2 kappa E2
    z = 0.1 + 1.25j
    maps = admissible_maps(z)
    comps = extract_components(lambda w: eisenstein_eval("E2", w, 60) ** 2, 4, 2, z, maps)
    predicted = delta_op(E2 * E2).evaluate(z, 60)
    assert abs(comps[1] - predicted) <= 1e-8 * abs(predicted)
    assert abs(comps[2] - adopted_kappa().numeric ** 2) <= 1e-8


def test_commutators_by_hand():
    # D delta(e2) = 0 and delta D(e2) = 2 e2, so [D, delta] e2 = -2 e2
    assert commutator(D_op, delta_op, E2) == E2 * -2
    assert commutator(delta_op, D_op, E2) == E_op(E2)
    assert commutator(E_op, D_op, E4) == D_op(E4) * 2


def test_relations_sweep():
    mons = monomials(20)
    for name in ("[E,D]=2D", "[E,delta]=-2delta"):
        assert all(not SL2_RELATIONS[name](p) for p in mons), name
    assert all(containment_ok(p) for p in mons)
    assert all(not OBSERVED_RELATIONS["[delta,D]=E"](p) for p in mons)
    # the ordering [D, delta] fails on everything except the constant monomial
    failing = [p for p in mons if SL2_RELATIONS["[D,delta]=E"](p)]
    assert len(failing) == len(mons) - 1


def test_sl2_report():
    rep = sl2_commutator_check(8)
    rel = rep.details["relations"]
    assert rel["[E,D]=2D"]["failures"] == 0
    assert rel["[E,delta]=-2delta"]["failures"] == 0
    assert rel["[delta,D]=E"]["failures"] == 0
    assert rel["[D,delta]=E"]["failures"] > 0
    assert rep.details["containment_failures"] == 0
