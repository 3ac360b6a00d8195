"""Certified/heuristic bracket container used by every estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

__all__ = ["BoundReport"]


@dataclass(frozen=True)
class BoundReport:
    """A bracket [certified_lower, certified_upper] plus the best heuristic value.

    `certified_lower` and `certified_upper` are mathematically guaranteed
    bounds on the reported quantity; `heuristic_lower` is the best value a
    search produced and may rely on non-certified normalization.  `method`
    names how the endpoints were obtained (and flags when the upper end is
    only a restricted/heuristic estimate).  Construction clamps the values
    into certified_lower <= heuristic_lower <= certified_upper.
    """

    certified_lower: float
    heuristic_lower: float
    certified_upper: float
    method: str = ""
    detail: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        lo = float(self.certified_lower)
        hi = float(self.certified_upper)
        if math.isnan(lo) or math.isnan(hi) or math.isnan(float(self.heuristic_lower)):
            raise ValueError("bounds must not be NaN")
        lo = max(0.0, lo)
        hi = max(hi, 0.0)
        lo = min(lo, hi)
        heur = min(max(float(self.heuristic_lower), lo), hi)
        object.__setattr__(self, "certified_lower", lo)
        object.__setattr__(self, "heuristic_lower", heur)
        object.__setattr__(self, "certified_upper", hi)

    @property
    def width(self) -> float:
        return self.certified_upper - self.certified_lower

    def contains(self, value: float, slack: float = 0.0) -> bool:
        """True when `value` lies in the bracket inflated by `slack` (relative)."""
        pad = slack * max(abs(value), 1e-30)
        return self.certified_lower - pad <= value <= self.certified_upper + pad

    def to_dict(self) -> dict[str, Any]:
        return {
            "certified_lower": self.certified_lower,
            "heuristic_lower": self.heuristic_lower,
            "certified_upper": self.certified_upper,
            "method": self.method,
            "detail": self.detail,
        }
