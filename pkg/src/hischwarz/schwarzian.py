"""
Classical and higher (Aharonov) Schwarzians on jets.

Near ``w = z`` the kernel ``G(w, z) = f'(z) / (f(w) - f(z))`` expands as
``1/(w - z) - sum_{n>=1} S_n[f](z) (w - z)^(n-1)``.  Two routes compute the
``S_n``:

* :func:`aharonov_direct` reads the coefficients off ``u G`` with
  ``u = w - z0`` (one reciprocal of a jet);
* :func:`aharonov_recursive` starts from the pre-Schwarzian and the
  Schwarzian and climbs ``(n+1) S_n = S_{n-1}' + sum_{k=2}^{n-2} S_k S_{n-k}``.

Each is the other's oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .errors import CriticalPoint, OrderError, PoleError, ZeroConstantTerm
from .moebius import MoebiusMap, jfactor, moebius_jet
from .report import DEGENERATE, FAIL, PASS, CheckReport, compare_jets
from .series import Jet, is_exact, jet_compose, jet_derive, jet_inverse, jet_mul, jet_reciprocal

CRITICAL_FLOOR = 1e-12


@dataclass(frozen=True)
class AharonovSequence:
    """``S_1 .. S_N`` at a point (numbers) or as local functions (jets).

    Stored 1-indexed through :meth:`s`; ``values[0]`` is ``S_1``.
    """

    values: tuple

    def s(self, n: int):
        if n < 1 or n > len(self.values):
            raise IndexError(f"S_{n} not available (have S_1..S_{len(self.values)})")
        return self.values[n - 1]

    @property
    def N(self) -> int:
        return len(self.values)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def constant_terms(self) -> "AharonovSequence":
        return AharonovSequence(tuple(v.coeffs[0] if isinstance(v, Jet) else v for v in self.values))

    def vanishes_from(self, n: int = 2, tol: float = 0.0) -> bool:
        vals = self.constant_terms().values[n - 1 :]
        return all(abs(v) <= tol for v in vals)


def _check_regular(f: Jet) -> None:
    c1 = f.coeffs[1]
    if is_exact(c1):
        if c1 == 0:
            raise CriticalPoint("f'(z0) = 0")
        return
    scale = max(abs(c) for c in f.coeffs[1:4])
    if abs(c1) <= CRITICAL_FLOOR * scale or c1 == 0:
        raise CriticalPoint(f"|f'(z0)| = {abs(c1):.3g} below floor (scale {scale:.3g})")


def _need(f: Jet, order: int, what: str) -> None:
    if f.order < order:
        raise OrderError(f"{what} needs a jet of order >= {order}, got {f.order}")


def pre_schwarzian(f: Jet) -> Jet:
    """``f'' / (2 f')`` (this is ``S_1``); order drops by 2."""
    _need(f, 2, "pre_schwarzian")
    _check_regular(f)
    d1 = jet_derive(f)
    d2 = jet_derive(d1)
    return jet_mul(d2, jet_reciprocal(d1)) / 2


def schwarzian_classical(f: Jet) -> Jet:
    """``(f''/f')' - (f''/f')^2 / 2``; order drops by 3."""
    _need(f, 3, "schwarzian_classical")
    _check_regular(f)
    d1 = jet_derive(f)
    p = jet_mul(jet_derive(d1), jet_reciprocal(d1))
    dp = jet_derive(p)
    return dp - jet_mul(p, p).truncate(dp.order) / 2


def _kernel_series(f: Jet) -> Jet:
    """``P(u) = (f(z0+u) - f(z0)) / u`` as a jet in u."""
    return Jet(f.coeffs[1:], f.base_point)


def aharonov_direct(f: Jet, N: int) -> AharonovSequence:
    """``S_1 .. S_N`` at the base point, read off ``u G = f'(z0) / P(u)``."""
    _need(f, N + 1, f"aharonov_direct(N={N})")
    _check_regular(f)
    P = _kernel_series(f).truncate(N)
    Q = jet_reciprocal(P) * f.coeffs[1]
    return AharonovSequence(tuple(-Q.coeffs[n] for n in range(1, N + 1)))


def aharonov_recursive(f: Jet, N: int) -> AharonovSequence:
    """``S_1 .. S_N`` as jets via the derivative recurrence.

    The input order must be at least ``N + 3``.  For ``n = 3`` the quadratic
    sum is empty, so ``4 S_3 = S_2'``.
    """
    _need(f, N + 3, f"aharonov_recursive(N={N})")
    S: list[Jet] = [pre_schwarzian(f)]
    if N >= 2:
        S.append(schwarzian_classical(f) / 6)
    for n in range(3, N + 1):
        acc = jet_derive(S[n - 2])
        for k in range(2, n - 1):
            acc = acc + jet_mul(S[k - 1], S[n - k - 1])
        S.append(acc / (n + 1))
    return AharonovSequence(tuple(S[:N]))


def methods_agreement(f: Jet, N: int) -> float:
    """Largest |direct - recursive| over ``S_1 .. S_N`` (relative for floats)."""
    d = aharonov_direct(f, N).values
    r = aharonov_recursive(f, N).constant_terms().values
    if all(is_exact(x) for x in d + r):
        return float(max(abs(x - y) for x, y in zip(d, r)))
    return max(abs(x - y) / max(abs(x), abs(y), 1.0) for x, y in zip(d, r))


def bivariate_identity_check(f: Jet, N: int, tol: float = 1e-10) -> CheckReport:
    """Check the w-derivative of the kernel expansion.

    ``f'(w) f'(z0) / (f(w) - f(z0))^2 = u^-2 + sum_n (n - 1) S_n u^(n-2)``.
    With ``K = f'(z0) f'(z0+u) / P(u)^2`` this says ``K_0 = 1``, ``K_1 = 0``
    and ``K_n = (n - 1) S_n``.
    """
    _need(f, N + 1, "bivariate_identity_check")
    _check_regular(f)
    S = aharonov_direct(f, N)
    P = _kernel_series(f).truncate(N)
    inv = jet_reciprocal(P)
    K = jet_mul(jet_derive(f).truncate(N), jet_mul(inv, inv)) * f.coeffs[1]
    expected = [1, 0] + [(n - 1) * S.s(n) for n in range(2, N + 1)]
    diffs = [K.coeffs[k] - expected[k] for k in range(N + 1)]
    return _coefficient_report("bivariate", diffs, [K.coeffs[k] for k in range(N + 1)], tol)


def _coefficient_report(name, diffs, scale_vals, tol, **details) -> CheckReport:
    worst = max(abs(d) for d in diffs)
    if all(is_exact(d) for d in diffs):
        return CheckReport(name, float(worst), PASS if worst == 0 else FAIL, details)
    scale = max([abs(v) for v in scale_vals] + [1.0])
    res = float(worst / scale)
    return CheckReport(name, res, PASS if res <= tol else FAIL, details)


def riccati_check(jet_at: Callable[[complex, int], Jet], z0: complex, w_offset: complex = 0.1,
                  h: float = 1e-5, order: int = 16, h_bounds=(1e-8, 1e-2),
                  tol: float = 1e-6) -> CheckReport:
    """Finite-difference check of ``dG/dz = G^2 + (f''/f') G`` at ``w = z0 + w_offset``.

    ``jet_at(point, order)`` supplies jets of f; ``f(w)`` comes from the jet at
    ``z0`` and the z-derivative from a central difference over ``z0 +- h``.
    """
    if not h_bounds[0] <= h <= h_bounds[1]:
        raise ValueError(f"step h={h} outside [{h_bounds[0]}, {h_bounds[1]}]")
    center = jet_at(z0, order)
    fw = center.evaluate(z0 + w_offset)

    def G(z):
        jz = jet_at(z, 2)
        return jz.coeffs[1] / (fw - jz.coeffs[0])

    lhs = (G(z0 + h) - G(z0 - h)) / (2 * h)
    g0 = G(z0)
    ratio = 2 * center.coeffs[2] / center.coeffs[1]
    rhs = g0 * g0 + ratio * g0
    res = abs(lhs - rhs) / max(abs(rhs), 1.0)
    return CheckReport("riccati", float(res), PASS if res <= tol else FAIL,
                       {"lhs": [lhs.real, lhs.imag], "rhs": [complex(rhs).real, complex(rhs).imag]})


def post_moebius(f: Jet, g: MoebiusMap) -> Jet:
    """Jet of ``(a f + b) / (c f + d)``."""
    den = f * g.c + g.d
    try:
        inv = jet_reciprocal(den)
    except ZeroConstantTerm as exc:
        raise PoleError("c f(z0) + d vanishes") from exc
    return jet_mul(f * g.a + g.b, inv)


def pre_moebius(f_at_gz0: Jet, g: MoebiusMap, z0) -> Jet:
    """Jet at ``z0`` of ``f o g``, given the jet of f at ``g(z0)``."""
    inner = moebius_jet(g, z0, f_at_gz0.order)
    return jet_compose(f_at_gz0, inner)


def transform_Sn_expected(S_at_gz0: AharonovSequence, g: MoebiusMap, z0, n: int):
    """``S_n[f o g](z0)`` predicted from ``S_k[f](g z0)``, ``k <= n`` (det g = 1).

    ``sum_{j=0}^{n-2} C(n-2, j) S_{n-j}[f](g z0) (-c)^j / (c z0 + d)^(2n-j)``
    """
    if n < 2:
        raise ValueError("the transformation law is stated for n >= 2")
    if S_at_gz0.N < n:
        raise IndexError(f"need S values up to index {n}, have {S_at_gz0.N}")
    _require_unimodular(g)
    J = jfactor(g, z0)
    if is_exact(J):
        J = Fraction(J)
    vals = S_at_gz0.constant_terms()
    return sum(
        math.comb(n - 2, j) * vals.s(n - j) * (-g.c) ** j / J ** (2 * n - j) for j in range(n - 1)
    )


def transform_S1_expected(S1_at_gz0, g: MoebiusMap, z0):
    """``S_1[f o g](z0) = -c/(c z0 + d) + g'(z0) S_1[f](g z0)``."""
    J = jfactor(g, z0)
    if is_exact(J):
        J = Fraction(J)
    return -g.c / J + g.det / J**2 * S1_at_gz0


def _require_unimodular(g: MoebiusMap) -> None:
    det = g.det
    if (is_exact(det) and det != 1) or (not is_exact(det) and abs(det - 1) > 1e-12):
        raise ValueError(f"det g must be 1, got {det!r}")


def ode_solutions(R: Jet, order: int) -> tuple[Jet, Jet]:
    """Power-series solutions of ``y'' + R y = 0`` with (y, y') = (1, 0) and (0, 1).

    ``(k+2)(k+1) y_{k+2} = -sum_{j<=k} R_j y_{k-j}``
    """
    _need(R, order - 2, "ode_solutions")

    def solve(y0, y1):
        y = [y0, y1]
        for k in range(order - 1):
            s = sum(R.coeffs[j] * y[k - j] for j in range(k + 1))
            y.append(Fraction(-s, (k + 2) * (k + 1)) if is_exact(s) else -s / ((k + 2) * (k + 1)))
        return Jet(y[: order + 1], R.base_point)

    return solve(1, 0), solve(0, 1)


def ode_schwarzian_oracle(R: Jet, N: int) -> CheckReport:
    """Verify ``{y2/y1, z} = 2R`` to order N for the solutions of ``y'' + R y = 0``.

    ``y2/y1`` is regular at the base point, unlike ``y1/y2``; both have the
    same Schwarzian.
    """
    _need(R, N + 2, "ode_schwarzian_oracle")
    y1, y2 = ode_solutions(R, N + 3)
    f = jet_mul(y2, jet_reciprocal(y1))
    lhs = schwarzian_classical(f)
    return compare_jets("ode", lhs, (R * 2).truncate(N))


def cocycle_check(f_at_w0: Jet, w: Jet) -> CheckReport:
    """``{f o w, z} = {f, w}(w(z)) w'(z)^2 + {w, z}`` as jets at the common order."""
    lhs = schwarzian_classical(jet_compose(f_at_w0, w))
    sf = schwarzian_classical(f_at_w0)
    dw = jet_derive(w)
    rhs = jet_mul(jet_compose(sf, w), jet_mul(dw, dw)) + schwarzian_classical(w)
    return compare_jets("cocycle", lhs, rhs)


def inverse_function_check(w: Jet) -> CheckReport:
    """``{z, w} = -{w, z} (dz/dw)^2`` with ``z(w)`` the compositional inverse.

    Both sides live at ``w0 = w(z0)``; ``{w, z}`` is pulled back along the inverse.
    """
    z_of_w = jet_inverse(w)
    lhs = schwarzian_classical(z_of_w)
    dz = jet_derive(z_of_w)
    rhs = -jet_mul(jet_compose(schwarzian_classical(w), z_of_w), jet_mul(dz, dz))
    return compare_jets("inverse_function", lhs, rhs)


def projective_invariance_check(f: Jet, g: MoebiusMap, N: int) -> CheckReport:
    """``S_n[(a f + b)/(c f + d)] = S_n[f]`` for ``2 <= n <= N``."""
    before = aharonov_direct(f, N)
    after = aharonov_direct(post_moebius(f, g), N)
    diffs = [after.s(n) - before.s(n) for n in range(2, N + 1)]
    return _coefficient_report("projective_invariance", diffs, list(before.values[1:]), 1e-10)


def moebius_annihilation_check(g: MoebiusMap, z0, N: int) -> CheckReport:
    """Möbius jets have ``S_1 = -c/(c z0 + d)`` and ``S_n = 0`` for ``n >= 2``."""
    jet = moebius_jet(g, z0, N + 3)
    S = aharonov_direct(jet, N)
    J = jfactor(g, z0)
    expected_s1 = -g.c / (Fraction(J) if is_exact(J) else J)
    diffs = [S.s(1) - expected_s1] + [S.s(n) for n in range(2, N + 1)]
    diffs += list(schwarzian_classical(jet).coeffs)
    return _coefficient_report("moebius_annihilation", diffs, [expected_s1], 1e-10)


def classify_degenerate(S: AharonovSequence, floor: float = 0.0) -> str:
    """DEGENERATE when every ``S_n`` with ``n >= 2`` vanishes (Möbius-like input)."""
    return DEGENERATE if S.vanishes_from(2, floor) else PASS


def bernoulli_numbers(n_max: int) -> list[Fraction]:
    """``B_0 .. B_n`` (with ``B_1 = -1/2``) from ``sum_{k<=m} C(m+1, k) B_k = 0``."""
    B = [Fraction(1)]
    for m in range(1, n_max + 1):
        B.append(-sum(math.comb(m + 1, k) * B[k] for k in range(m)) / (m + 1))
    return B


def exp_aharonov_expected(N: int) -> list[Fraction]:
    """``S_n[exp] = -B_n / n!``."""
    B = bernoulli_numbers(N)
    return [-B[n] / math.factorial(n) for n in range(1, N + 1)]
