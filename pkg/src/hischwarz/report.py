"""Residual reports shared by the identity checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .series import Jet, is_exact

PASS = "PASS"
FAIL = "FAIL"
DEGENERATE = "DEGENERATE"


@dataclass
class CheckReport:
    name: str
    max_residual: float
    status: str
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "max_residual": self.max_residual,
            "status": self.status,
            "details": self.details,
        }


def relative_residual(lhs, rhs, floor: float = 1e-300) -> float:
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), floor)


def compare_jets(name: str, lhs: Jet, rhs: Jet, tol: float = 1e-10, **details) -> CheckReport:
    """Compare two jets at their common order.

    Exact jets pass only on exact equality; float jets use the largest
    coefficient difference relative to the largest coefficient magnitude.
    """
    n = min(lhs.order, rhs.order)
    a, b = lhs.coeffs[: n + 1], rhs.coeffs[: n + 1]
    diffs = [x - y for x, y in zip(a, b)]
    exact = all(is_exact(x) for x in a + b)
    worst = max(abs(d) for d in diffs)
    details.setdefault("order", n)
    if exact:
        return CheckReport(name, float(worst), PASS if worst == 0 else FAIL, details)
    scale = max([abs(x) for x in a + b] + [1e-300])
    res = float(worst / scale)
    return CheckReport(name, res, PASS if res <= tol else FAIL, details)
