"""Distance with per-coordinate tolerances earned from observed spread.

A deviation profile summarizes how far samples landed from a learned center
on one side of it: segment edges measured outward from the center plus the
probability mass caught in each segment.  The mass-weighted segment midpoints
form a directional margin; coordinate deviations inside the margin count as
zero, and only the excess beyond it accumulates into the distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "DeviationProfile",
    "DistributionSummary",
    "TwoSidedProfile",
    "delta_margin",
    "leap_distance",
    "profile_from_samples",
]


@dataclass(frozen=True)
class DeviationProfile:
    """One-sided segmented deviation distribution.

    Segment ``i`` spans ``[boundaries[i-1], boundaries[i])`` with an implicit
    leading edge at 0; ``masses[i]`` is the probability mass observed in that
    segment.  An empty profile carries no mass and no margin.
    """

    boundaries: tuple[float, ...] = ()
    masses: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        boundaries = tuple(float(b) for b in self.boundaries)
        masses = tuple(float(m) for m in self.masses)
        object.__setattr__(self, "boundaries", boundaries)
        object.__setattr__(self, "masses", masses)
        if len(boundaries) != len(masses):
            raise ValueError("boundaries and masses must have equal length")
        if boundaries and boundaries[0] <= 0.0:
            raise ValueError("boundaries must start above 0")
        if any(b <= a for a, b in zip(boundaries, boundaries[1:])):
            raise ValueError("boundaries must be strictly ascending")
        if any(m < 0.0 or m > 1.0 for m in masses):
            raise ValueError("masses must lie in [0, 1]")
        if math.fsum(masses) > 1.0 + 1e-9:
            raise ValueError("masses must sum to at most 1")


@dataclass(frozen=True)
class TwoSidedProfile:
    """Deviation profiles above and below a center; the margin is directional."""

    above: DeviationProfile = DeviationProfile()
    below: DeviationProfile = DeviationProfile()


@dataclass(frozen=True)
class DistributionSummary:
    """Learned center with its two-sided deviation profile.

    ``dispersion`` is the probability-scale value at convergence of the
    learner that produced the center; ``sample_count`` the number of samples
    it was learned from.
    """

    center: float
    profile: TwoSidedProfile
    sample_count: int
    dispersion: float

    def __post_init__(self) -> None:
        if self.sample_count < 0:
            raise ValueError("sample_count must be nonnegative")
        if self.dispersion < 0.0:
            raise ValueError("dispersion must be nonnegative")


def delta_margin(profile: DeviationProfile) -> float:
    """Mass-weighted sum of segment midpoint distances (the margin)."""
    total = 0.0
    lo = 0.0
    for hi, mass in zip(profile.boundaries, profile.masses):
        total += 0.5 * (lo + hi) * mass
        lo = hi
    return total


def _margin_toward(summary: DistributionSummary, direction: float) -> float:
    side = summary.profile.above if direction > 0.0 else summary.profile.below
    return delta_margin(side)


def leap_distance(
    w,
    v,
    summaries: Sequence[DistributionSummary],
) -> float:
    """Root of summed squared coordinate deviations clamped by the margins.

    Each coordinate's margin is taken from ``summaries[j]`` on the side of
    ``v[j]`` facing ``w[j]``; deviations at or inside the margin contribute
    zero.  ``summaries[j].center`` must agree with ``v[j]`` within 1e-9.
    """
    wv = np.asarray(w, dtype=float).ravel()
    vv = np.asarray(v, dtype=float).ravel()
    if wv.size != vv.size or wv.size != len(summaries):
        raise ValueError("w, v, and summaries must have equal length")
    total = 0.0
    for wj, vj, summary in zip(wv, vv, summaries):
        if abs(summary.center - vj) > 1e-9:
            raise ValueError(
                f"summary center {summary.center} does not match coordinate {vj}"
            )
        gap = abs(wj - vj)
        if gap == 0.0:
            continue
        margin = _margin_toward(summary, wj - vj)
        if gap > margin:
            total += (gap - margin) ** 2
    return math.sqrt(total)


def _side_profile(
    deviations: np.ndarray, segment_count: int, coverage: float, total_count: int
) -> DeviationProfile:
    if deviations.size == 0:
        return DeviationProfile()
    edge = float(np.quantile(deviations, coverage))
    if edge <= 0.0:
        return DeviationProfile()
    width = edge / segment_count
    kept = deviations[deviations <= edge]
    indices = np.minimum((kept / width).astype(int), segment_count - 1)
    counts = np.bincount(indices, minlength=segment_count)
    boundaries = tuple(width * k for k in range(1, segment_count + 1))
    masses = tuple(c / total_count for c in counts)
    return DeviationProfile(boundaries, masses)


def profile_from_samples(
    samples, center: float, segment_count: int, coverage: float = 0.99
) -> TwoSidedProfile:
    """Bin per-side deviations from ``center`` into equal-width segments.

    Each side's segments span ``[0, q]`` where ``q`` is that side's
    ``coverage``-quantile of deviations (left-closed right-open bins, last
    bin closed); deviations past ``q`` are dropped.  Masses are normalized by
    the total sample count, so the two sides jointly carry mass at most 1;
    samples exactly at the center contribute to the denominator only.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("samples must be nonempty")
    if segment_count < 1:
        raise ValueError("segment_count must be at least 1")
    if not 0.0 < coverage <= 1.0:
        raise ValueError("coverage must lie in (0, 1]")
    above = x[x > center] - center
    below = center - x[x < center]
    return TwoSidedProfile(
        above=_side_profile(above, segment_count, coverage, x.size),
        below=_side_profile(below, segment_count, coverage, x.size),
    )
