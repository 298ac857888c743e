import math

import numpy as np
import pytest

from hischwarz.equivariant import (
    Representation,
    chordal,
    converse_check,
    depth_component_identity,
    equivariance_check,
    exp_function,
    fit_rep,
    fit_representation,
    homomorphism_check,
    identity_function,
    is_regular,
    main_theorem_verify,
    moebius_function,
    parse_function,
    rational_equivariant,
    rational_from_name,
    regular_paired_points,
    sample_regular_cases,
)
from hischwarz.moebius import IDENTITY, S, T, MoebiusMap, act_point, compose, inverse, word_to_matrix
from hischwarz.quasimodular import eisenstein_eval, eisenstein_q
from hischwarz.report import DEGENERATE, FAIL, PASS
from hischwarz.sampling import admissible_maps
from hischwarz.schwarzian import aharonov_direct


@pytest.fixture(scope="module")
def e4():
    return rational_from_name("E4")


def test_jet_matches_value_and_derivative(e4):
    z, h = 0.2 + 1.3j, 1e-6
    jet = e4.jet_at(z, 4)
    assert abs(jet.coeffs[0] - e4.value(z)) <= 1e-12 * abs(e4.value(z))
    fd = (e4.value(z + h) - e4.value(z - h)) / (2 * h)
    assert abs(jet.coeffs[1] - fd) <= 1e-6 * abs(fd)


def test_invariant_jet_has_the_same_higher_invariants(e4):
    z = 0.1 + 1.4j
    a = aharonov_direct(e4.jet_at(z, 10), 7)
    b = aharonov_direct(e4.invariant_jet_at(z, 10), 7)
    for n in range(2, 8):
        assert abs(a.s(n) - b.s(n)) <= 1e-9 * abs(a.s(n))


def test_delta_function_two_ways():
    z = 2j
    h = rational_from_name("Delta")
    # Delta'/Delta = 2 pi i E2
    other = z + 12 / (2j * math.pi * eisenstein_eval("E2", z))
    assert abs(h.value(z) - other) <= 1e-8 * abs(other)


def test_translation_equivariance(e4):
    z = 0.5j + 0.1
    assert abs(e4.value(z + 1) - (e4.value(z) + 1)) <= 1e-8


def test_equivariance(e4):
    rng = np.random.default_rng(0)
    cases = sample_regular_cases(rng, e4, 4, 5)
    for g, z, _ in cases:
        assert equivariance_check(e4, g, [z]).max_residual <= 1e-7
    assert equivariance_check(identity_function(), S, [0.3 + 1j, 1j]).max_residual == 0
    assert equivariance_check(exp_function(), S, [0.2 + 1.3j]).max_residual > 0.1


def test_chordal():
    assert chordal(1j, 1j) == 0
    assert chordal(0, 1e30) == pytest.approx(1.0)


def test_regularity(e4):
    assert is_regular(e4, 0.1 + 1.2j)
    # too low for the q-expansion to be trusted
    assert not is_regular(e4, 0.02j)
    # -1/z has a pole at 0
    assert not is_regular(moebius_function(S), 1e-9 + 0j)


def test_fit_representation(e4):
    rng = np.random.default_rng(1)
    for word in ("S", "T", "TS"):
        g = word_to_matrix(word)
        fit = fit_representation(e4, g, regular_paired_points(e4, g, rng, 8, 0.25))
        assert fit.deviation_from(g) <= 1e-6
        assert fit.residual <= 1e-8
    fit = fit_representation(identity_function(), T, [complex(0.1 * i, 1 + 0.1 * i) for i in range(6)])
    assert fit.deviation_from(T) < 1e-12


def test_fit_conjugated_moebius():
    m = MoebiusMap(2, 1, 1, 1)
    h = moebius_function(m)
    pts = [complex(0.1 * i - 0.3, 1 + 0.07 * i) for i in range(8)]
    for g in (T, S, word_to_matrix("TST")):
        fit = fit_representation(h, g, pts)
        assert fit.deviation_from(compose(compose(m, g), inverse(m))) < 1e-10


def test_homomorphism(e4):
    rng = np.random.default_rng(2)
    words = ["TT", "ST", "TSTs", "1"]
    rep, residuals = fit_rep(e4, words, rng)
    hom = homomorphism_check(rep, words)
    assert hom["max_deviation"] <= 1e-6
    assert hom["per_word"]["1"] == 0
    assert max(residuals.values()) <= 1e-8
    manual = Representation({"T": T, "S": S})
    assert manual.product_image("TS").entries == word_to_matrix("TS").entries


def test_main_theorem(e4):
    cases = sample_regular_cases(np.random.default_rng(11), e4, 5, 10)
    rep = main_theorem_verify(e4, range(2, 7), cases)
    assert rep.verdict == PASS
    assert max(rep.per_n.values()) <= 1e-7
    assert rep.component_residual <= 1e-7 and rep.s1_residual <= 1e-10
    assert rep.method_agreement <= 1e-10
    assert len(rep.cases) == 50
    with pytest.raises(ValueError):
        main_theorem_verify(e4, [2, 3], cases, jet_order=4)


def test_main_theorem_controls():
    exp = exp_function()
    cases = sample_regular_cases(np.random.default_rng(3), exp, 2, 5)
    rep = main_theorem_verify(exp, [2], cases)
    assert rep.verdict == FAIL and rep.per_n[2] > 1e-2
    ident = identity_function()
    rep = main_theorem_verify(ident, range(2, 6), sample_regular_cases(np.random.default_rng(3), ident, 1, 4))
    assert rep.verdict == DEGENERATE


def test_converse():
    e6 = rational_from_name("E6")
    cases = sample_regular_cases(np.random.default_rng(4), e6, 3, 5)
    rep = converse_check(e6, 5, cases)
    assert rep.status == "IMPLIED" and sorted(rep.per_n) == list(range(2, 8))
    assert max(rep.per_n.values()) <= 1e-7
    exp = exp_function()
    rep = converse_check(exp, 4, sample_regular_cases(np.random.default_rng(4), exp, 3, 5))
    assert rep.status == "CONSISTENT_FAIL" and rep.per_n[4] > 1e-2 and rep.per_n[2] > 1e-2
    ident = identity_function()
    rep = converse_check(ident, 4, sample_regular_cases(np.random.default_rng(4), ident, 1, 3))
    assert rep.status == "VACUOUS"


def test_depth_components():
    h = rational_equivariant(eisenstein_q("E4", 80), 4)
    z = 0.1 + 1.2j
    maps = admissible_maps(z)
    for n in range(2, 7):
        assert depth_component_identity(h, n, z, maps) <= 1e-8


def test_parse_function():
    assert parse_function("rational:E6").label == "rational:E6"
    assert parse_function("identity").moebius
    g = parse_function("moebius:2,1,1,1")
    assert abs(g.value(1j) - act_point(MoebiusMap(2, 1, 1, 1), 1j)) < 1e-15
    with pytest.raises(ValueError):
        parse_function("sin")
    with pytest.raises(ValueError):
        rational_from_name("E8")
    assert IDENTITY.entries == (1, 0, 0, 1)
