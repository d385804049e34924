"""Self-organizing mode estimation with a probability scale.

The iteration alternates three updates until the center settles: collect the
members within a fixed-width window of the current center, move the center to
the member mean, and re-measure the probability scale as the members' mean
absolute deviation.  The window migrates toward regions of high sample
density, so the converged center is a mode estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .leap import DistributionSummary, profile_from_samples
from .scales import ScaleKind

__all__ = ["SOConfig", "SOResult", "fit_summary", "self_organize"]


@dataclass(frozen=True)
class SOConfig:
    """Parameters of the self-organizing iteration.

    ``scale_kind`` names the member-distance scale; scalar samples always
    reduce it to the absolute difference.  ``window_halfwidth`` is the
    membership radius in sample units.
    """

    scale_kind: ScaleKind = ScaleKind.EUCLIDEAN
    window_halfwidth: float = 1.0
    max_iterations: int = 200
    tolerance: float = 1e-8

    def __post_init__(self) -> None:
        if self.window_halfwidth <= 0.0:
            raise ValueError("window_halfwidth must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class SOResult:
    """Converged center, member indices, and probability-scale value."""

    center: float
    members: tuple[int, ...]
    scale_value: float
    iterations: int
    converged: bool

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("members must be nonempty")


def self_organize(samples, init_center: float, config: SOConfig) -> SOResult:
    """Iterate window membership and member mean from ``init_center``.

    An empty window degenerates to the single nearest sample, which keeps the
    update total.  The iteration stops once the center moves less than the
    tolerance, or at ``max_iterations`` with ``converged=False``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("samples must be nonempty")
    previous = float(init_center)
    center = previous
    members = np.array([int(np.argmin(np.abs(x - previous)))])
    scale = 0.0
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        gaps = np.abs(x - previous)
        inside = np.flatnonzero(gaps <= config.window_halfwidth)
        members = inside if inside.size else np.array([int(np.argmin(gaps))])
        center = float(x[members].mean())
        scale = float(np.abs(x[members] - center).mean())
        if abs(center - previous) < config.tolerance:
            converged = True
            break
        previous = center
    return SOResult(
        center=center,
        members=tuple(int(i) for i in members),
        scale_value=scale,
        iterations=iterations,
        converged=converged,
    )


def fit_summary(
    samples, config: SOConfig, segment_count: int, coverage: float = 0.99
) -> DistributionSummary:
    """Mode-seek from the sample median, then profile all samples around it."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("samples must be nonempty")
    result = self_organize(x, float(np.median(x)), config)
    profile = profile_from_samples(x, result.center, segment_count, coverage)
    return DistributionSummary(
        center=result.center,
        profile=profile,
        sample_count=int(x.size),
        dispersion=result.scale_value,
    )
