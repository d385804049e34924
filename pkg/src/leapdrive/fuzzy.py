"""Space mappings for multi-objective unification.

Two directions: one input fanned out into many derived views (a mapping-name
set consumed by the image pipeline), and many objective values pulled into a
single membership space where a max-min rule picks the best control point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = ["MappingSpecSet", "MembershipSpec", "astrict", "optimal_control_point"]


@dataclass(frozen=True)
class MembershipSpec:
    """Asymmetric triangular membership over one objective.

    Membership is 1 at ``center`` and falls linearly to 0 at
    ``center - left_halfwidth`` and ``center + right_halfwidth``.
    """

    center: float
    left_halfwidth: float
    right_halfwidth: float

    def __post_init__(self) -> None:
        if self.left_halfwidth <= 0.0 or self.right_halfwidth <= 0.0:
            raise ValueError("halfwidths must be positive")

    def membership(self, value: float) -> float:
        if value >= self.center:
            return max(0.0, 1.0 - (value - self.center) / self.right_halfwidth)
        return max(0.0, 1.0 - (self.center - value) / self.left_halfwidth)


@dataclass(frozen=True)
class MappingSpecSet:
    """Names of the derived views one input is fanned out into."""

    names: tuple[str, ...]

    def __post_init__(self) -> None:
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if not names:
            raise ValueError("at least one mapping name is required")
        if len(set(names)) != len(names):
            raise ValueError("mapping names must be unique")


def astrict(values, specs: Sequence[MembershipSpec]) -> np.ndarray:
    """Map objective values into the unified membership space, one per spec."""
    vals = np.asarray(values, dtype=float).ravel()
    if vals.size != len(specs):
        raise ValueError("values and specs must have equal length")
    return np.array([spec.membership(v) for v, spec in zip(vals, specs)])


def optimal_control_point(candidates, specs: Sequence[MembershipSpec]) -> int:
    """Index of the candidate maximizing its worst membership.

    Ties resolve to the lowest index.
    """
    if len(candidates) == 0:
        raise ValueError("candidates must be nonempty")
    scores = [float(np.min(astrict(c, specs))) for c in candidates]
    return int(np.argmax(scores))
