"""
Equivariant functions and numerical certification of the higher-Schwarzian
transformation law

    (cz+d)^(-2n) S_n[h](gz) = sum_{j=0}^{n-2} C(n-2, j) S_{n-j}[h](z) (c/(cz+d))^j.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import CriticalPoint, DegenerateConfiguration, InsufficientTruncation, PoleError, ZeroConstantTerm
from .moebius import (
    IDENTITY,
    GroupWord,
    MoebiusMap,
    act_point,
    compose,
    inverse,
    jfactor,
    moebius_jet,
    normalize_sl2,
    projective_distance,
    word_to_matrix,
)
from .quasimodular import QMComponents, eisenstein_q, extract_components, qm_transform_check
from .report import DEGENERATE, FAIL, PASS, relative_residual
from .sampling import paired_points, sample_cases
from .schwarzian import AharonovSequence, aharonov_direct, methods_agreement, pre_moebius, transform_S1_expected
from .series import TWO_PI_I, Jet, QSeries, exp_jet, jet_from_qseries, jet_mul, jet_reciprocal, qseries_eval, qseries_theta

POLE_RADIUS = 1e-3
# candidate Möbius images den/(num - t den) of h = num/den; None keeps h itself
INVARIANT_SHIFTS = (None, 0, 1, -1, 1j, -1j)
RESAMPLE_ATTEMPTS = 50
# Aharonov values below this count as zero when classifying Möbius-like input
DEGENERATE_FLOOR = 1e-12

_REGULAR_ERRORS = (CriticalPoint, PoleError, ZeroConstantTerm, InsufficientTruncation)


@dataclass(frozen=True)
class EquivariantFn:
    value: Callable[[complex], complex]
    jet_at: Callable[[complex, int], Jet]
    label: str
    moebius: bool = False
    # jet of some Möbius image M o h; same S_n for n >= 2, possibly better conditioned
    invariant_jet_at: Callable[[complex, int], Jet] | None = None


def chordal(p: complex, q: complex) -> float:
    return abs(p - q) / math.sqrt((1 + abs(p) ** 2) * (1 + abs(q) ** 2))


def rational_equivariant(f_q: QSeries, k: int, label: str | None = None) -> EquivariantFn:
    """``h(z) = z + k f(z)/f'(z)`` for a weight-k form given by its q-expansion."""
    dq = qseries_theta(f_q)

    def value(z):
        f = qseries_eval(f_q, z, k).value
        df = TWO_PI_I * qseries_eval(dq, z, k + 2).value
        if abs(df) <= 1e-12 * max(abs(f), 1.0):
            raise PoleError(f"f'(z) nearly vanishes at {z!r}: near critical point, resample")
        return z + k * f / df

    def jet_at(z, N):
        fj = jet_from_qseries(f_q, z, N + 1, k)
        dfj = fj.derive()
        try:
            inv = jet_reciprocal(dfj)
        except ZeroConstantTerm as exc:
            raise PoleError(f"f'(z) nearly vanishes at {z!r}") from exc
        return Jet.variable(N, complex(z)) + inv * fj.truncate(N) * k

    def invariant_jet_at(z, N):
        # h = num/den with num = z f' + k f, den = f'.  Near a zero of f' the jet
        # of h grows like a pole and S_n (n >= 2) loses digits to cancellation,
        # so use whichever of num/den, den/(num - t den) has the farthest
        # denominator zero.
        fj = jet_from_qseries(f_q, z, N + 1, k)
        den = fj.derive()
        num = Jet.variable(N, complex(z)) * den + fj.truncate(N) * k
        best = None
        for t in INVARIANT_SHIFTS:
            top, bottom = (num, den) if t is None else (den, num - den * t)
            try:
                inv = jet_reciprocal(bottom)
            except ZeroConstantTerm:
                continue
            growth = max(abs(c) ** (1 / i) for i, c in enumerate(inv.coeffs) if i)
            if best is None or growth < best[0]:
                best = (growth, top, inv)
        if best is None:
            raise PoleError(f"no regular Möbius image of h at {z!r}")
        return jet_mul(best[1], best[2])

    return EquivariantFn(value, jet_at, label or f"rational(weight {k})", invariant_jet_at=invariant_jet_at)


def rational_from_name(name: str, q_order: int = 40) -> EquivariantFn:
    """``"E4"``, ``"E6"`` or ``"Delta"`` (``E4^3 - E6^2``)."""
    if name in ("E4", "E6"):
        k = int(name[1])
        return rational_equivariant(eisenstein_q(name, q_order), k, f"rational:{name}")
    if name in ("Delta", "D"):
        s = eisenstein_q("E4", q_order) ** 3 - eisenstein_q("E6", q_order) ** 2
        return rational_equivariant(s, 12, "rational:Delta")
    raise ValueError(f"no rational equivariant function for {name!r}")


def identity_function() -> EquivariantFn:
    return EquivariantFn(lambda z: z, lambda z, N: Jet.variable(N, complex(z)), "identity", moebius=True)


def moebius_function(m: MoebiusMap) -> EquivariantFn:
    return EquivariantFn(lambda z: act_point(m, z), lambda z, N: moebius_jet(m, complex(z), N),
                         f"moebius{m.entries}", moebius=True)


def exp_function() -> EquivariantFn:
    return EquivariantFn(cmath.exp, lambda z, N: exp_jet(N, complex(z), exact=False), "exp")


def parse_function(spec: str, q_order: int = 40) -> EquivariantFn:
    """``rational:E4``, ``rational:E6``, ``rational:Delta``, ``identity``, ``exp``, ``moebius:a,b,c,d``."""
    if spec.startswith("rational:"):
        return rational_from_name(spec.split(":", 1)[1], q_order)
    if spec == "identity":
        return identity_function()
    if spec == "exp":
        return exp_function()
    if spec.startswith("moebius:"):
        a, b, c, d = (complex(x) for x in spec.split(":", 1)[1].split(","))
        return moebius_function(MoebiusMap(a, b, c, d))
    raise ValueError(f"unknown function {spec!r}")


def is_regular(h: EquivariantFn, z: complex) -> bool:
    """Away from poles (chordal radius) and critical points of h."""
    try:
        j = h.jet_at(z, 1)
    except _REGULAR_ERRORS:
        return False
    v, d = j.coeffs
    if 1 / math.sqrt(1 + abs(v) ** 2) < POLE_RADIUS:
        return False
    return abs(d) > 1e-6


def sample_regular_cases(rng: np.random.Generator, h: EquivariantFn, n_words: int, n_points: int,
                         **kwargs) -> list[tuple[MoebiusMap, complex, GroupWord]]:
    """Like :func:`sample_cases`, redrawing a word's points until h is regular at z and gz."""
    out = []
    for _ in range(n_words):
        for _ in range(RESAMPLE_ATTEMPTS):
            cases = sample_cases(rng, 1, n_points, **kwargs)
            if all(is_regular(h, c.z) and is_regular(h, act_point(c.g, c.z)) for c in cases):
                out.extend((c.g, c.z, c.word) for c in cases)
                break
        else:
            raise DegenerateConfiguration(f"no regular sample set for {h.label}")
    return out


# ---------------------------------------------------------------------------
# equivariance and representations


@dataclass
class EquivarianceReport:
    max_residual: float
    checked: int
    rejected: int

    @property
    def status(self) -> str:
        return PASS if self.checked else DEGENERATE


def equivariance_check(h: EquivariantFn, g: MoebiusMap, points: Iterable[complex]) -> EquivarianceReport:
    """Max chordal distance between ``h(gz)`` and ``g(h(z))``; near-singular points are skipped."""
    worst, checked, rejected = 0.0, 0, 0
    for z in points:
        if not (is_regular(h, z) and is_regular(h, act_point(g, z))):
            rejected += 1
            continue
        lhs = h.value(act_point(g, z))
        hz = h.value(z)
        try:
            rhs = act_point(g, hz)
        except PoleError:
            rhs = complex("inf")
        worst = max(worst, chordal(lhs, rhs) if rhs != complex("inf") else 1 / math.sqrt(1 + abs(lhs) ** 2))
        checked += 1
    if not checked:
        raise DegenerateConfiguration("every point was rejected as near-singular")
    return EquivarianceReport(worst, checked, rejected)


@dataclass
class RepresentationFit:
    matrix: MoebiusMap
    residual: float
    singular_values: tuple

    def deviation_from(self, g: MoebiusMap) -> float:
        return projective_distance(self.matrix, g)


def fit_representation(h: EquivariantFn, g: MoebiusMap, points: Sequence[complex],
                       holdout: int | None = None, tol: float = 1e-6) -> RepresentationFit:
    """Find ``rho(g)`` with ``h(gz) = rho(g) h(z)`` from point correspondences.

    Solves ``a x + b - c x y - d y = 0`` (``x = h(z)``, ``y = h(gz)``) by SVD on
    all but the last ``holdout`` points and validates on those.
    """
    if len(points) < 4:
        raise DegenerateConfiguration("need at least 4 points")
    holdout = holdout if holdout is not None else max(1, len(points) // 4)
    xs = np.array([h.value(z) for z in points], dtype=complex)
    ys = np.array([h.value(act_point(g, z)) for z in points], dtype=complex)
    gaps = [abs(a - b) for i, a in enumerate(xs) for b in xs[i + 1 :]]
    if min(gaps) < 1e-8:
        raise DegenerateConfiguration("coincident values of h")
    fit_x, fit_y = xs[:-holdout], ys[:-holdout]
    A = np.column_stack([fit_x, np.ones_like(fit_x), -fit_x * fit_y, -fit_y])
    _, sv, vh = np.linalg.svd(A)
    a, b, c, d = vh[-1].conj()
    rho = normalize_sl2(MoebiusMap(complex(a), complex(b), complex(c), complex(d)))
    residual = max(chordal(act_point(rho, x), y) for x, y in zip(xs[-holdout:], ys[-holdout:]))
    return RepresentationFit(rho, float(residual), tuple(float(s) for s in sv))


@dataclass
class Representation:
    """Fitted images, keyed by word string; generators are ``"T"`` and ``"S"``."""

    images: dict = field(default_factory=dict)
    projective_scale: str = "det1"

    def product_image(self, word: GroupWord | str) -> MoebiusMap:
        letters = word.letters if isinstance(word, GroupWord) else word
        gens = {"T": self.images["T"], "S": self.images["S"]}
        gens["t"] = inverse(gens["T"])
        gens["s"] = inverse(gens["S"])
        out = IDENTITY
        for ch in letters:
            out = compose(out, gens[ch])
        return out


def fit_rep(h: EquivariantFn, words: Sequence[GroupWord | str], rng: np.random.Generator,
            points_per_word: int = 8, min_height: float = 0.25) -> tuple[Representation, dict]:
    """Fit rho on T, S and every word; returns the representation and per-word fit residuals."""
    rep = Representation()
    residuals = {}
    for w in ["T", "S"] + [str(w) for w in words]:
        key = str(w)
        if key in rep.images:
            continue
        if key in ("1", ""):
            rep.images[key] = IDENTITY
            residuals[key] = 0.0
            continue
        g = word_to_matrix(key)
        fit = fit_representation(h, g, regular_paired_points(h, g, rng, points_per_word, min_height))
        rep.images[key] = fit.matrix
        residuals[key] = fit.residual
    return rep, residuals


def regular_paired_points(h, g, rng, count, min_height):
    pts = []
    for _ in range(RESAMPLE_ATTEMPTS):
        for z in paired_points(rng, g, count, min_height):
            if is_regular(h, z) and is_regular(h, act_point(g, z)):
                pts.append(z)
            if len(pts) == count:
                return pts
    raise DegenerateConfiguration(f"no regular points for {g.entries}")


def homomorphism_check(rep: Representation, words: Sequence[GroupWord | str]) -> dict:
    """Projective deviation between each fitted word image and the product of generator images."""
    devs = {}
    for w in words:
        key = str(w)
        devs[key] = projective_distance(rep.images[key], rep.product_image("" if key == "1" else key))
    return {"max_deviation": max(devs.values(), default=0.0), "per_word": devs}


# ---------------------------------------------------------------------------
# the transformation law for S_n


@dataclass
class TheoremReport:
    label: str
    per_n: dict
    verdict: str
    cases: list
    component_residual: float
    s1_residual: float
    method_agreement: float

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "per_n": {str(n): r for n, r in sorted(self.per_n.items())},
            "verdict": self.verdict,
            "component_residual": self.component_residual,
            "s1_residual": self.s1_residual,
            "method_agreement": self.method_agreement,
            "cases": self.cases,
        }


class _SCache:
    """Jets and Aharonov values of h per point.

    ``S_1`` comes from the jet of h; ``S_n`` for ``n >= 2`` from
    ``h.invariant_jet_at`` when available.
    """

    def __init__(self, h: EquivariantFn, order: int, N: int):
        self.h, self.order, self.N = h, order, N
        self._jets: dict = {}
        self._S: dict = {}

    @staticmethod
    def _key(z):
        return (complex(z).real, complex(z).imag)

    def jet(self, z):
        key = self._key(z)
        if key not in self._jets:
            self._jets[key] = self.h.jet_at(complex(z), self.order)
        return self._jets[key]

    def S(self, z) -> AharonovSequence:
        key = self._key(z)
        if key not in self._S:
            S = aharonov_direct(self.jet(z), self.N)
            if self.h.invariant_jet_at is not None and self.N >= 2:
                rest = aharonov_direct(self.h.invariant_jet_at(complex(z), self.order), self.N)
                S = AharonovSequence((S.s(1),) + rest.values[1:])
            self._S[key] = S
        return self._S[key]


def main_relation_sides(S_z, S_gz, g: MoebiusMap, z: complex, n: int):
    J = jfactor(g, z)
    X = g.c / J
    lhs = J ** (-2 * n) * S_gz.s(n)
    rhs = sum(math.comb(n - 2, j) * S_z.s(n - j) * X**j for j in range(n - 1))
    return lhs, rhs


def main_theorem_verify(h: EquivariantFn, n_range: Sequence[int], cases: Sequence[tuple],
                        jet_order: int | None = None, tol: float = 1e-7,
                        cross_check: bool = True) -> TheoremReport:
    """Evaluate both sides of the S_n transformation law on every ``(g, z)`` case.

    ``cases`` holds ``(g, z)`` or ``(g, z, word)`` tuples.  Reports the max
    relative residual per n and a PASS/FAIL/DEGENERATE verdict; Möbius-like
    h (all ``S_n = 0``, ``n >= 2``) is flagged rather than passed.
    """
    n_max = max(n_range)
    if min(n_range) < 2:
        raise ValueError("n must be >= 2")
    order = jet_order if jet_order is not None else n_max + 3
    if order < n_max + 3:
        raise ValueError(f"jet order {order} below n_max + 3 = {n_max + 3}")
    cache = _SCache(h, order, n_max)
    per_n = {n: 0.0 for n in n_range}
    records = []
    degenerate = True
    comp_res = s1_res = agree = 0.0
    for case in cases:
        g, z = case[0], complex(case[1])
        word = str(case[2]) if len(case) > 2 else None
        gz = act_point(g, z)
        S_z, S_gz = cache.S(z), cache.S(gz)
        scale = max(abs(v) for v in S_z.values[1:] + S_gz.values[1:])
        if scale > DEGENERATE_FLOOR:
            degenerate = False
        rec = {"word": word, "g": g.to_json(), "z": [z.real, z.imag], "residual": {}}
        for n in n_range:
            lhs, rhs = main_relation_sides(S_z, S_gz, g, z, n)
            res = relative_residual(lhs, rhs) if max(abs(lhs), abs(rhs)) > DEGENERATE_FLOOR else 0.0
            per_n[n] = max(per_n[n], res)
            rec["residual"][str(n)] = res
        if cross_check:
            # the same law seen through the component formalism
            for n in n_range:
                comps = QMComponents(2 * n, n - 2, tuple(
                    (lambda w, k=n - j, b=math.comb(n - 2, j): b * cache.S(w).s(k)) for j in range(n - 1)))
                if max(abs(cache.S(gz).s(n)), abs(S_z.s(n))) > DEGENERATE_FLOOR:
                    comp_res = max(comp_res, qm_transform_check(comps, g, z))
            composed = pre_moebius(cache.jet(gz), g, z)
            s1 = aharonov_direct(composed, 1).s(1)
            s1_res = max(s1_res, relative_residual(s1, transform_S1_expected(S_gz.s(1), g, z)))
            agree = max(agree, methods_agreement(cache.jet(z), n_max))
        records.append(rec)
    if degenerate:
        verdict = DEGENERATE
    else:
        verdict = PASS if all(r <= tol for r in per_n.values()) else FAIL
    records.sort(key=lambda r: (r["word"] or "", r["z"]))
    return TheoremReport(h.label, per_n, verdict, records, comp_res, s1_res, agree)


@dataclass
class ConverseReport:
    n_single: int
    single_verdict: str
    per_n: dict
    status: str

    def to_json(self) -> dict:
        return {"n_single": self.n_single, "single_verdict": self.single_verdict,
                "per_n": {str(n): r for n, r in sorted(self.per_n.items())}, "status": self.status}


def converse_check(h: EquivariantFn, n_single: int, cases: Sequence[tuple], tol: float = 1e-7,
                   jet_order: int | None = None) -> ConverseReport:
    """If the law holds at ``n_single``, check it at every ``2 <= n <= n_single + 2``.

    Status values: ``IMPLIED`` (all pass), ``VIOLATED`` (single passes but some
    n fails), ``CONSISTENT_FAIL`` (single fails and n = 2 fails too),
    ``INCONSISTENT`` (single fails but n = 2 passes), ``VACUOUS`` (Möbius-like h).
    """
    single = main_theorem_verify(h, [n_single], cases, jet_order, tol, cross_check=False)
    if single.verdict == DEGENERATE:
        return ConverseReport(n_single, DEGENERATE, single.per_n, "VACUOUS")
    if single.verdict == PASS:
        full = main_theorem_verify(h, list(range(2, n_single + 3)), cases,
                                   max(jet_order or 0, n_single + 5), tol, cross_check=False)
        status = "IMPLIED" if full.verdict == PASS else "VIOLATED"
        return ConverseReport(n_single, PASS, full.per_n, status)
    low = main_theorem_verify(h, [2], cases, jet_order, tol, cross_check=False)
    per_n = {**single.per_n, **low.per_n}
    status = "CONSISTENT_FAIL" if low.verdict == FAIL else "INCONSISTENT"
    return ConverseReport(n_single, FAIL, per_n, status)


def depth_component_identity(h: EquivariantFn, n: int, z: complex, maps: Sequence[MoebiusMap],
                             jet_order: int | None = None) -> float:
    """Fit the components of ``S_n[h]`` in ``X = c/(cz+d)`` over several maps sharing z
    and compare with ``C(n-2, j) S_{n-j}[h](z)``; returns the residual relative to the
    largest component."""
    cache = _SCache(h, jet_order or n + 3, n)
    fitted = extract_components(lambda w: cache.S(w).s(n), 2 * n, n - 2, z, maps)
    S_z = cache.S(z)
    expected = np.array([math.comb(n - 2, j) * S_z.s(n - j) for j in range(n - 1)])
    return float(np.abs(fitted - expected).max() / np.abs(expected).max())
