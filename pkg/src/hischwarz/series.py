"""
Truncated power series ("jets") and exact q-expansions.

A :class:`Jet` of order ``N`` at a base point ``z0`` stores the Taylor
coefficients ``c_k = f^(k)(z0)/k!`` for ``k = 0..N``.  Coefficients beyond
``N`` are unknown, not zero, so every operation reports the order it can
guarantee and never pads.  Two coefficient domains are used:

* exact rationals (:class:`fractions.Fraction` / ``int``) for algebraic
  identities, compared with ``==``;
* complex doubles for evaluation on the upper half-plane, compared with a
  relative tolerance and an absolute floor.

A :class:`QSeries` holds ``a_0 + a_1 q + ... + a_M q^M`` with exact
rational coefficients, ``q = exp(2 pi i z)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number
from typing import Iterable, NamedTuple, Sequence

from .errors import (
    BasePointMismatch,
    CompositionMismatch,
    InsufficientTruncation,
    NotUpperHalfPlane,
    OrderError,
    ZeroConstantTerm,
)

TWO_PI_I = 2j * math.pi


@dataclass(frozen=True)
class CoefficientDomain:
    tag: str
    rel_tol: float = 0.0
    abs_tol: float = 0.0

    @property
    def exact(self) -> bool:
        return self.tag == "rational"

    def equal(self, a, b) -> bool:
        if self.exact:
            return a == b
        return abs(a - b) <= max(self.abs_tol, self.rel_tol * max(abs(a), abs(b)))


RATIONAL = CoefficientDomain("rational")
COMPLEX = CoefficientDomain("complex", rel_tol=1e-10, abs_tol=1e-14)

# reciprocal refuses constant terms below this fraction of max(|a_1|, |a_2|);
# higher coefficients grow like R^-k and would make the floor meaningless
RECIPROCAL_FLOOR = 1e-12
FLOOR_TERMS = 3


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def domain_of(values: Iterable) -> CoefficientDomain:
    return RATIONAL if all(is_exact(v) for v in values) else COMPLEX


def _points_match(p, q) -> bool:
    p = 0 if p is None else p
    q = 0 if q is None else q
    if is_exact(p) and is_exact(q):
        return p == q
    return COMPLEX.equal(complex(p), complex(q))


def _common_base(a: "Jet", b: "Jet"):
    if not _points_match(a.base_point, b.base_point):
        raise BasePointMismatch(f"base points differ: {a.base_point!r} vs {b.base_point!r}")
    return a.base_point if a.base_point is not None else b.base_point


@dataclass(frozen=True)
class Jet:
    """Truncated Taylor expansion ``sum c_k (z - base_point)^k``, ``k <= order``."""

    coeffs: tuple
    base_point: Number | None = None

    def __post_init__(self):
        coeffs = tuple(self.coeffs)
        if not coeffs:
            raise OrderError("a jet needs at least one coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def constant(cls, value, order: int, base_point=None) -> "Jet":
        return cls((value,) + (0,) * order, base_point)

    @classmethod
    def variable(cls, order: int, base_point=None) -> "Jet":
        """Jet of ``z`` itself at ``base_point`` (i.e. ``z0 + u``)."""
        z0 = 0 if base_point is None else base_point
        if order == 0:
            return cls((z0,), base_point)
        return cls((z0, 1) + (0,) * (order - 1), base_point)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def domain(self) -> CoefficientDomain:
        return domain_of(self.coeffs)

    def __getitem__(self, k):
        return self.coeffs[k]

    def __len__(self):
        return len(self.coeffs)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise OrderError(f"cannot raise order {self.order} to {order}")
        return Jet(self.coeffs[: order + 1], self.base_point)

    def with_base(self, base_point) -> "Jet":
        return Jet(self.coeffs, base_point)

    def evaluate(self, point):
        """Horner evaluation of the Taylor polynomial at ``point``."""
        u = point - (0 if self.base_point is None else self.base_point)
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * u + c
        return acc

    def equals(self, other: "Jet", domain: CoefficientDomain | None = None) -> bool:
        """Coefficientwise comparison at the common order."""
        if not _points_match(self.base_point, other.base_point):
            return False
        n = min(self.order, other.order)
        dom = domain or (RATIONAL if self.domain.exact and other.domain.exact else COMPLEX)
        return all(dom.equal(a, b) for a, b in zip(self.coeffs[: n + 1], other.coeffs[: n + 1]))

    def __add__(self, other):
        if isinstance(other, Jet):
            return jet_add(self, other)
        return Jet((self.coeffs[0] + other,) + self.coeffs[1:], self.base_point)

    __radd__ = __add__

    def __neg__(self):
        return Jet(tuple(-c for c in self.coeffs), self.base_point)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, other)
        return Jet(tuple(c * other for c in self.coeffs), self.base_point)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return jet_mul(self, jet_reciprocal(other))
        if is_exact(other) and all(is_exact(c) for c in self.coeffs):
            return Jet(tuple(Fraction(c) / other for c in self.coeffs), self.base_point)
        return Jet(tuple(c / other for c in self.coeffs), self.base_point)

    def __rtruediv__(self, other):
        return jet_reciprocal(self) * other

    def __pow__(self, n: int):
        if n < 0:
            return jet_reciprocal(self) ** (-n)
        result = Jet.constant(1, self.order, self.base_point)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def derive(self) -> "Jet":
        return jet_derive(self)

    def __call__(self, inner: "Jet") -> "Jet":
        return jet_compose(self, inner)


def jet_add(a: Jet, b: Jet) -> Jet:
    base = _common_base(a, b)
    n = min(a.order, b.order)
    return Jet(tuple(a.coeffs[k] + b.coeffs[k] for k in range(n + 1)), base)


def jet_mul(a: Jet, b: Jet) -> Jet:
    base = _common_base(a, b)
    n = min(a.order, b.order)
    ac, bc = a.coeffs, b.coeffs
    out = []
    for k in range(n + 1):
        s = 0
        for i in range(k + 1):
            s += ac[i] * bc[k - i]
        out.append(s)
    return Jet(out, base)


def jet_reciprocal(a: Jet) -> Jet:
    a0 = a.coeffs[0]
    if is_exact(a0):
        if a0 == 0:
            raise ZeroConstantTerm("reciprocal of a jet with zero constant term")
        a0 = Fraction(a0)
    else:
        scale = max(abs(c) for c in a.coeffs[:FLOOR_TERMS])
        if abs(a0) <= RECIPROCAL_FLOOR * scale or a0 == 0:
            raise ZeroConstantTerm(f"constant term {a0!r} below floor (scale {scale:g})")
    inv0 = 1 / a0
    b = [inv0]
    for k in range(1, a.order + 1):
        s = 0
        for j in range(1, k + 1):
            s += a.coeffs[j] * b[k - j]
        b.append(-s * inv0)
    return Jet(b, a.base_point)


def jet_derive(a: Jet) -> Jet:
    if a.order < 1:
        raise OrderError("cannot differentiate an order-0 jet")
    return Jet(tuple(k * a.coeffs[k] for k in range(1, a.order + 1)), a.base_point)


def jet_compose(outer: Jet, inner: Jet) -> Jet:
    """Taylor coefficients of ``outer(inner(z))`` at inner's base point.

    ``inner`` must take the value ``outer.base_point`` at its own base point.
    """
    target = 0 if outer.base_point is None else outer.base_point
    if not _points_match(inner.coeffs[0], target):
        raise CompositionMismatch(
            f"inner value {inner.coeffs[0]!r} does not match outer base point {target!r}"
        )
    n = min(outer.order, inner.order)
    t = Jet((0,) + inner.coeffs[1 : n + 1], inner.base_point)
    acc = Jet.constant(outer.coeffs[n], n, inner.base_point)
    for k in range(n - 1, -1, -1):
        acc = jet_mul(acc, t) + outer.coeffs[k]
    return acc


def jet_inverse(w: Jet) -> Jet:
    """Compositional inverse: the jet ``z(w)`` at ``w(z0)`` with value ``z0``.

    Solved degree by degree: the k-th coefficient of ``w(z(v))`` is linear in
    the unknown ``b_k`` with slope ``w_1``.
    """
    if w.order < 1:
        raise OrderError("inverse needs order >= 1")
    w1 = w.coeffs[1]
    if w1 == 0:
        raise ZeroConstantTerm("w'(z0) = 0; no local inverse")
    if is_exact(w1):
        w1 = Fraction(w1)
    z0 = 0 if w.base_point is None else w.base_point
    shifted = Jet((0,) + w.coeffs[1:], None)
    b = [0, 1 / w1]
    for k in range(2, w.order + 1):
        trial = Jet(b + [0], None)
        residual = jet_compose(shifted.truncate(k), trial).coeffs[k]
        b.append(-residual / w1)
    return Jet([z0] + b[1:], w.coeffs[0])


# ---------------------------------------------------------------------------
# q-expansions


@dataclass(frozen=True)
class QSeries:
    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(Fraction(c) for c in self.coeffs)
        if not coeffs:
            raise OrderError("a q-series needs at least one coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, n):
        return self.coeffs[n]

    def truncate(self, order: int) -> "QSeries":
        if order > self.order:
            raise OrderError(f"cannot raise order {self.order} to {order}")
        return QSeries(self.coeffs[: order + 1])

    def __add__(self, other):
        if isinstance(other, QSeries):
            return qseries_add(self, other)
        return QSeries((self.coeffs[0] + other,) + self.coeffs[1:])

    __radd__ = __add__

    def __neg__(self):
        return QSeries(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, QSeries):
            return qseries_mul(self, other)
        return QSeries(c * other for c in self.coeffs)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "QSeries":
        result = QSeries((1,) + (0,) * self.order)
        for _ in range(n):
            result = result * self
        return result

    def theta(self) -> "QSeries":
        return qseries_theta(self)

    def to_json(self) -> dict:
        return to_json(self)


def qseries_add(a: QSeries, b: QSeries) -> QSeries:
    n = min(a.order, b.order)
    return QSeries(a.coeffs[k] + b.coeffs[k] for k in range(n + 1))


def qseries_mul(a: QSeries, b: QSeries) -> QSeries:
    n = min(a.order, b.order)
    return QSeries(
        sum(a.coeffs[i] * b.coeffs[k - i] for i in range(k + 1)) for k in range(n + 1)
    )


def qseries_theta(s: QSeries) -> QSeries:
    """``q d/dq``: ``a_n -> n a_n``."""
    return QSeries(n * a for n, a in enumerate(s.coeffs))


class QEval(NamedTuple):
    value: complex
    tail: float


def _nome(z: complex) -> complex:
    z = complex(z)
    if z.imag <= 0:
        raise NotUpperHalfPlane(f"Im z must be positive, got {z!r}")
    return cmath.exp(TWO_PI_I * z)


def _tail_estimate(mags: Sequence[float], r: float, growth: int) -> float:
    """Geometric tail ``C (M+1)^p r^(M+1) / (1 - r')`` with ``C = max |a_n| / n^p``.

    ``growth`` is the polynomial growth exponent ``p`` assumed for the
    coefficients beyond the stored range.
    """
    m = len(mags) - 1
    if m < 1:
        return 0.0 if mags[0] == 0 or r == 0 else float("inf")
    c = max(mags[n] / n**growth for n in range(1, m + 1))
    if c == 0:
        return 0.0
    ratio = r * ((m + 2) / (m + 1)) ** growth
    if ratio >= 1:
        return float("inf")
    return c * (m + 1) ** growth * r ** (m + 1) / (1 - ratio)


def qseries_eval(s: QSeries, z: complex, weight_of_tail: int = 0, tol: float | None = 1e-12) -> QEval:
    """Evaluate ``s`` at ``q = exp(2 pi i z)`` with a reported tail estimate.

    ``weight_of_tail`` is the weight ``k`` of the form; coefficients are
    assumed to grow like ``n^(k-1)`` past the truncation.  Raises
    :class:`InsufficientTruncation` when the estimated tail exceeds
    ``tol * max(1, |value|)``.
    """
    q = _nome(z)
    acc = 0j
    for a in reversed(s.coeffs):
        acc = acc * q + float(a)
    mags = [abs(float(a)) for a in s.coeffs]
    if s.order == 0:
        tail = 0.0
    else:
        tail = _tail_estimate(mags, abs(q), max(weight_of_tail - 1, 0))
    if tol is not None and tail > tol * max(1.0, abs(acc)):
        raise InsufficientTruncation(
            f"tail estimate {tail:.3g} at Im z = {complex(z).imag:.3g}; increase the q-order"
        )
    return QEval(acc, tail)


def jet_from_qseries(s: QSeries, z0: complex, N: int, weight_of_tail: int = 0,
                     tol: float | None = 1e-10) -> Jet:
    """Jet of order ``N`` at ``z0`` of the function with q-expansion ``s``.

    ``c_k = (1/k!) sum_n a_n (2 pi i n)^k q^n``.  The truncation check compares
    each derivative's tail estimate to the sum of absolute values of its terms.
    """
    q = _nome(z0)
    r = abs(q)
    powers = [1.0 + 0j]
    for _ in range(s.order):
        powers.append(powers[-1] * q)
    a = [float(c) for c in s.coeffs]
    coeffs = []
    growth = max(weight_of_tail - 1, 0)
    for k in range(N + 1):
        fact = math.factorial(k)
        terms = [a[n] * (TWO_PI_I * n) ** k / fact * powers[n] for n in range(s.order + 1)]
        ck = sum(terms)
        if tol is not None and s.order > 0:
            mags = [abs(a[n]) * (2 * math.pi * n) ** k / fact for n in range(s.order + 1)]
            tail = _tail_estimate(mags, r, growth + k)
            scale = sum(abs(t) for t in terms)
            if tail > tol * max(scale, 1e-300):
                raise InsufficientTruncation(
                    f"derivative {k}: tail {tail:.3g} vs scale {scale:.3g} at Im z = {complex(z0).imag:.3g}"
                )
        coeffs.append(ck)
    return Jet(coeffs, complex(z0))


# ---------------------------------------------------------------------------
# JSON


def encode_number(x):
    if is_exact(x):
        f = Fraction(x)
        return [str(f.numerator), str(f.denominator)]
    x = complex(x)
    return [x.real, x.imag]


def decode_number(v):
    if isinstance(v[0], str):
        return Fraction(int(v[0]), int(v[1]))
    if v[1] == 0:
        return complex(v[0], 0.0)
    return complex(v[0], v[1])


def to_json(obj: Jet | QSeries) -> dict:
    if isinstance(obj, QSeries):
        return {"base_point": None, "coeffs": [encode_number(c) for c in obj.coeffs]}
    bp = obj.base_point
    if bp is None:
        base = None
    elif is_exact(bp):
        base = [encode_number(bp), ["0", "1"]]
    else:
        base = [complex(bp).real, complex(bp).imag]
    return {"base_point": base, "coeffs": [encode_number(c) for c in obj.coeffs]}


def jet_from_json(data: dict) -> Jet:
    base = data.get("base_point")
    if base is not None:
        if isinstance(base[0], list):
            re, im = decode_number(base[0]), decode_number(base[1])
            base = re if im == 0 else complex(re) + 1j * complex(im)
        else:
            base = complex(base[0], base[1])
    return Jet([decode_number(c) for c in data["coeffs"]], base)


def qseries_from_json(data: dict) -> QSeries:
    coeffs = [decode_number(c) for c in data["coeffs"]]
    if not all(is_exact(c) for c in coeffs):
        raise ValueError("q-series coefficients must be exact rationals")
    return QSeries(coeffs)


# ---------------------------------------------------------------------------
# common jets


def exp_jet(order: int, base_point=None, exact: bool = True) -> Jet:
    """Jet of ``exp`` at ``base_point``.

    With ``exact=True`` the overall factor ``e^{z0}`` is dropped so the
    coefficients stay rational (``1/k!``).  Every Aharonov invariant is
    insensitive to that factor.
    """
    if exact:
        return Jet([Fraction(1, math.factorial(k)) for k in range(order + 1)], base_point)
    scale = cmath.exp(0 if base_point is None else base_point)
    return Jet([scale / math.factorial(k) for k in range(order + 1)], base_point)
