"""Deterministic sampling of (group element, point) pairs on the upper half-plane.

Evaluating q-expansions needs both ``z`` and ``g z`` reasonably high in the
upper half-plane, so samplers reject pairs whose image falls below
``min_image_height``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfiguration
from .moebius import GroupWord, MoebiusMap, act_point, random_word, sl2z_with_bottom_row, word_to_matrix

DEFAULT_HEIGHTS = (1.0, 2.0)
DEFAULT_MIN_IMAGE_HEIGHT = 0.25
MAX_ATTEMPTS = 50


@dataclass(frozen=True)
class Case:
    word: GroupWord
    g: MoebiusMap
    z: complex

    @property
    def key(self) -> tuple:
        return (str(self.word), self.z.real, self.z.imag)


def sample_point(rng: np.random.Generator, heights=DEFAULT_HEIGHTS, re_range=(-0.5, 0.5)) -> complex:
    x = rng.uniform(*re_range)
    y = rng.uniform(*heights)
    return complex(x, y)


def image_height(g: MoebiusMap, z: complex) -> float:
    return complex(act_point(g, z)).imag


def sample_cases(rng: np.random.Generator, n_words: int, n_points: int, max_length: int = 8,
                 heights=DEFAULT_HEIGHTS, min_image_height: float = DEFAULT_MIN_IMAGE_HEIGHT,
                 require_c: bool = True, max_words: int = 5000) -> list[Case]:
    """``n_words`` random words, each with ``n_points`` admissible points.

    Word lengths are uniform on ``1..max_length``.  A word is dropped when
    ``c = 0`` (if ``require_c``) or when no admissible point turns up within
    ``MAX_ATTEMPTS`` draws.
    """
    cases: list[Case] = []
    accepted = 0
    for _ in range(max_words):
        if accepted == n_words:
            return cases
        length = int(rng.integers(1, max_length + 1))
        word = random_word(rng, length)
        g = word_to_matrix(word)
        if require_c and g.c == 0:
            continue
        # Im(gz) <= 1 / (c^2 Im z): hopeless words are skipped without drawing points
        if g.c != 0 and g.c**2 * heights[0] * min_image_height > 1:
            continue
        points = []
        for _ in range(n_points):
            for _ in range(MAX_ATTEMPTS):
                z = sample_point(rng, heights)
                if image_height(g, z) >= min_image_height:
                    points.append(z)
                    break
            else:
                break
        if len(points) < n_points:
            continue
        cases.extend(Case(word, g, z) for z in points)
        accepted += 1
    if accepted < n_words:
        raise DegenerateConfiguration(f"found only {accepted} admissible words out of {n_words}")
    return cases


def paired_points(rng: np.random.Generator, g: MoebiusMap, count: int,
                  min_height: float = DEFAULT_MIN_IMAGE_HEIGHT) -> list[complex]:
    """Points ``z`` with both ``Im z`` and ``Im g z`` at least ``min_height``.

    For ``c != 0`` the points lie near the isometric circle ``|c z + d| = 1``
    where ``Im z`` and ``Im g z`` are comparable.
    """
    out = []
    for _ in range(count * MAX_ATTEMPTS):
        if len(out) == count:
            break
        if g.c == 0:
            z = sample_point(rng, (1.0, 2.0))
        else:
            rho = rng.uniform(0.8, 1.25)
            theta = rng.uniform(math.pi / 4, 3 * math.pi / 4)
            z = -g.d / g.c + rho * complex(math.cos(theta), math.sin(theta)) / abs(g.c)
        if z.imag >= min_height and image_height(g, z) >= min_height:
            out.append(z)
    if len(out) < count:
        raise DegenerateConfiguration(f"could not place {count} points for {g.entries}")
    return out


def admissible_maps(z: complex, min_height: float = 0.2, max_c: int = 3, max_d: int = 6) -> list[MoebiusMap]:
    """SL2(Z) matrices with distinct bottom rows ``(c, d)``, ``c > 0``, keeping ``Im g z >= min_height``."""
    out = []
    for c in range(1, max_c + 1):
        for d in range(-max_d, max_d + 1):
            if math.gcd(c, d) != 1:
                continue
            g = sl2z_with_bottom_row(c, d)
            if image_height(g, z) >= min_height:
                out.append(g)
    return out
