"""Linear fractional maps, SL2(Z) words and local expansions of group elements."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import PoleError, SingularMatrix
from .series import Jet, is_exact

# |cz + d| (or |det|) below this counts as zero for float entries
FLOAT_FLOOR = 1e-14

LETTERS = "TtSs"
_INVERSE_LETTER = {"T": "t", "t": "T", "S": "s", "s": "S"}


def _is_zero(x) -> bool:
    if is_exact(x):
        return x == 0
    return abs(x) <= FLOAT_FLOOR


def _div(x, y):
    if is_exact(x) and is_exact(y):
        q = Fraction(x) / y
        return q.numerator if q.denominator == 1 else q
    return x / y


@dataclass(frozen=True)
class MoebiusMap:
    """The map ``z -> (a z + b)/(c z + d)``.  Integer entries stay integers."""

    a: object
    b: object
    c: object
    d: object

    def __post_init__(self):
        if _is_zero(self.det):
            raise SingularMatrix(f"determinant of {self.entries} vanishes")

    @property
    def entries(self) -> tuple:
        return (self.a, self.b, self.c, self.d)

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    @property
    def is_integral(self) -> bool:
        return all(isinstance(x, int) for x in self.entries)

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return compose(self, other)

    def __call__(self, z):
        return act_point(self, z)

    def __neg__(self):
        return MoebiusMap(-self.a, -self.b, -self.c, -self.d)

    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def to_json(self) -> list:
        def enc(x):
            if isinstance(x, int):
                return x
            x = complex(x)
            return [x.real, x.imag]

        return [[enc(self.a), enc(self.b)], [enc(self.c), enc(self.d)]]

    @classmethod
    def from_json(cls, data) -> "MoebiusMap":
        def dec(x):
            return complex(x[0], x[1]) if isinstance(x, list) else x

        (a, b), (c, d) = data
        return cls(dec(a), dec(b), dec(c), dec(d))


IDENTITY = MoebiusMap(1, 0, 0, 1)
T = MoebiusMap(1, 1, 0, 1)
T_INV = MoebiusMap(1, -1, 0, 1)
S = MoebiusMap(0, -1, 1, 0)
S_INV = MoebiusMap(0, 1, -1, 0)

GENERATORS = {"T": T, "t": T_INV, "S": S, "s": S_INV}


def jfactor(g: MoebiusMap, z):
    """Automorphy factor ``c z + d``."""
    return g.c * z + g.d


def act_point(g: MoebiusMap, z):
    j = jfactor(g, z)
    if _is_zero(j):
        raise PoleError(f"c z + d vanishes at z = {z!r}")
    return _div(g.a * z + g.b, j)


def compose(g1: MoebiusMap, g2: MoebiusMap) -> MoebiusMap:
    """Matrix product ``g1 g2`` (apply g2 first)."""
    return MoebiusMap(
        g1.a * g2.a + g1.b * g2.c,
        g1.a * g2.b + g1.b * g2.d,
        g1.c * g2.a + g1.d * g2.c,
        g1.c * g2.b + g1.d * g2.d,
    )


def inverse(g: MoebiusMap) -> MoebiusMap:
    det = g.det
    return MoebiusMap(_div(g.d, det), _div(-g.b, det), _div(-g.c, det), _div(g.a, det))


def projectively_equal(g1: MoebiusMap, g2: MoebiusMap) -> bool:
    """Exact test for ``g1 = lambda g2``."""
    e1, e2 = g1.entries, g2.entries
    return all(e1[i] * e2[j] == e1[j] * e2[i] for i in range(4) for j in range(4))


@dataclass(frozen=True)
class GroupWord:
    """Word over T (z+1), t (z-1), S (-1/z), s (S inverse)."""

    letters: str = ""

    def __post_init__(self):
        bad = set(self.letters) - set(LETTERS)
        if bad:
            raise ValueError(f"unknown letters {sorted(bad)} in word {self.letters!r}")

    def __add__(self, other: "GroupWord") -> "GroupWord":
        return GroupWord(self.letters + other.letters)

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return self.letters or "1"


def word_to_matrix(w: GroupWord | str) -> MoebiusMap:
    letters = w.letters if isinstance(w, GroupWord) else w
    g = IDENTITY
    for ch in letters:
        g = compose(g, GENERATORS[ch])
    return g


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_word(seed, length: int = 8) -> GroupWord:
    """Reproducible word with no letter directly followed by its inverse."""
    rng = _rng(seed)
    out: list[str] = []
    for _ in range(length):
        choices = [ch for ch in LETTERS if not out or ch != _INVERSE_LETTER[out[-1]]]
        out.append(choices[int(rng.integers(len(choices)))])
    return GroupWord("".join(out))


def local_expansion(g: MoebiusMap, z0, N: int) -> Jet:
    """Jet at ``z0`` of ``w -> g(w) - g(z0)``.

    ``[u^k] = det (-c)^(k-1) / (c z0 + d)^(k+1)`` for ``k >= 1``.
    """
    j = jfactor(g, z0)
    if _is_zero(j):
        raise PoleError(f"g has a pole at z0 = {z0!r}")
    if is_exact(j):
        j = Fraction(j)
    det = g.det
    coeffs = [0]
    for k in range(1, N + 1):
        coeffs.append(det * (-g.c) ** (k - 1) / j ** (k + 1))
    return Jet(coeffs, z0)


def moebius_jet(g: MoebiusMap, z0, N: int) -> Jet:
    """Jet of ``g`` itself at ``z0`` (value ``g(z0)`` included)."""
    return local_expansion(g, z0, N) + act_point(g, z0)


def normalize_sl2(g: MoebiusMap) -> MoebiusMap:
    """Scale to determinant 1; sign chosen so the first entry that is not
    (numerically) zero has argument in ``[0, pi)``."""
    m = g.matrix()
    scale = np.sqrt(complex(g.det))
    m = m / scale
    for x in m.flat:
        if abs(x) > 1e-12 * np.abs(m).max():
            ang = np.angle(x)
            if not (-1e-12 <= ang < np.pi - 1e-12):
                m = -m
            break
    return MoebiusMap(*(complex(x) for x in m.flat))


def projective_distance(g1: MoebiusMap, g2: MoebiusMap) -> float:
    """``min_{s=+-1} |n(g1) - s n(g2)|_max / |n(g2)|_max`` with n = det-1 scaling."""
    m1 = g1.matrix() / np.sqrt(complex(g1.det))
    m2 = g2.matrix() / np.sqrt(complex(g2.det))
    ref = np.abs(m2).max()
    return float(min(np.abs(m1 - m2).max(), np.abs(m1 + m2).max()) / ref)


def sl2z_with_bottom_row(c: int, d: int) -> MoebiusMap:
    """Some integer matrix of determinant 1 with bottom row ``(c, d)``; gcd must be 1."""
    if math.gcd(c, d) != 1:
        raise SingularMatrix(f"gcd({c}, {d}) != 1")
    # extended Euclid: a d - b c = 1
    old_r, r = d, c
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    # old_s * d + old_t * c = old_r = +-1
    a, b = old_s * old_r, -old_t * old_r
    g = MoebiusMap(a, b, c, d)
    assert g.det == 1
    return g


def is_sl2z(g: MoebiusMap) -> bool:
    return g.is_integral and g.det == 1
