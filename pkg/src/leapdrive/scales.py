"""Distance scales, divergences, entropy, and fuzzy-event probability.

Two families of closeness measures share the convention that 0 means
indistinguishable: point-to-reference scales (:class:`ScaleKind`) and
distribution-to-distribution divergences (:class:`DivergenceKind`).
All logarithms are natural, so entropy and KL values are in nats.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BOOLEAN_THRESHOLD",
    "DiscreteDistribution",
    "DivergenceKind",
    "GaussianSummary",
    "ScaleKind",
    "divergence",
    "entropy",
    "fuzzy_event_probability",
    "scale_distance",
]

# Real-valued components are reinterpreted as booleans at this cutoff for the
# hamming and jaccard scales.
BOOLEAN_THRESHOLD = 0.5


class ScaleKind(enum.Enum):
    """Point-to-reference distance scales."""

    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"
    CHEBYSHEV = "chebyshev"
    MINKOWSKI = "minkowski"
    COSINE = "cosine"
    MAHALANOBIS = "mahalanobis"
    HAMMING = "hamming"
    JACCARD = "jaccard"


class DivergenceKind(enum.Enum):
    """Distribution-to-distribution divergences."""

    KL = "kl"
    PEARSON = "pearson"
    WASSERSTEIN1D = "wasserstein1d"


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability mass on a strictly ascending real support."""

    support: tuple[float, ...]
    mass: tuple[float, ...]

    def __post_init__(self) -> None:
        support = tuple(float(s) for s in self.support)
        mass = tuple(float(m) for m in self.mass)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "mass", mass)
        if len(support) != len(mass):
            raise ValueError("support and mass must have equal length")
        if len(support) == 0:
            raise ValueError("distribution needs at least one atom")
        if any(b <= a for a, b in zip(support, support[1:])):
            raise ValueError("support must be strictly ascending")
        if any(m < 0.0 or m > 1.0 for m in mass):
            raise ValueError("masses must lie in [0, 1]")
        if abs(math.fsum(mass) - 1.0) > 1e-9:
            raise ValueError("masses must sum to 1 within 1e-9")

    def __len__(self) -> int:
        return len(self.support)


@dataclass(frozen=True, eq=False)
class GaussianSummary:
    """Mean vector plus symmetric positive definite covariance."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        if mean.ndim != 1:
            raise ValueError("mean must be a vector")
        if cov.shape != (mean.size, mean.size):
            raise ValueError("covariance shape must match the mean dimension")
        if np.max(np.abs(cov - cov.T)) > 1e-9:
            raise ValueError("covariance must be symmetric within 1e-9")
        if np.min(np.linalg.eigvalsh(cov)) <= 0.0:
            raise ValueError("covariance must be positive definite")


def _as_pair(x, ref_center) -> tuple[np.ndarray, np.ndarray]:
    xv = np.asarray(x, dtype=float).ravel()
    cv = np.asarray(ref_center, dtype=float).ravel()
    if xv.size != cv.size:
        raise ValueError(f"dimension mismatch: {xv.size} vs {cv.size}")
    if xv.size == 0:
        raise ValueError("vectors must be nonempty")
    return xv, cv


def scale_distance(
    kind: ScaleKind,
    x,
    ref_center,
    ref_cov=None,
    *,
    minkowski_p: float = 2.0,
) -> float:
    """Distance from point ``x`` to the reference ``ref_center``.

    ``ref_cov`` is required (and must be symmetric positive definite) for the
    mahalanobis scale and ignored otherwise.  ``minkowski_p`` selects the
    exponent of the minkowski scale and must be finite and positive.
    """
    xv, cv = _as_pair(x, ref_center)
    diff = xv - cv

    if kind is ScaleKind.EUCLIDEAN:
        return float(np.linalg.norm(diff))
    if kind is ScaleKind.MANHATTAN:
        return float(np.sum(np.abs(diff)))
    if kind is ScaleKind.CHEBYSHEV:
        return float(np.max(np.abs(diff)))
    if kind is ScaleKind.MINKOWSKI:
        if not (math.isfinite(minkowski_p) and minkowski_p > 0.0):
            raise ValueError("minkowski_p must be finite and positive")
        return float(np.sum(np.abs(diff) ** minkowski_p) ** (1.0 / minkowski_p))
    if kind is ScaleKind.COSINE:
        nx = float(np.linalg.norm(xv))
        nc = float(np.linalg.norm(cv))
        if nx == 0.0 or nc == 0.0:
            raise ValueError("cosine scale is undefined for zero vectors")
        return 1.0 - float(np.dot(xv, cv)) / (nx * nc)
    if kind is ScaleKind.MAHALANOBIS:
        if ref_cov is None:
            raise ValueError("mahalanobis scale requires ref_cov")
        cov = np.asarray(ref_cov, dtype=float)
        if cov.shape != (xv.size, xv.size):
            raise ValueError("ref_cov shape must match the vector dimension")
        if np.max(np.abs(cov - cov.T)) > 1e-9:
            raise ValueError("ref_cov must be symmetric within 1e-9")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("ref_cov must be positive definite") from exc
        z = np.linalg.solve(chol, diff)
        return float(np.sqrt(np.dot(z, z)))
    if kind is ScaleKind.HAMMING:
        bx = xv >= BOOLEAN_THRESHOLD
        bc = cv >= BOOLEAN_THRESHOLD
        return float(np.count_nonzero(bx != bc))
    if kind is ScaleKind.JACCARD:
        bx = xv >= BOOLEAN_THRESHOLD
        bc = cv >= BOOLEAN_THRESHOLD
        union = np.count_nonzero(bx | bc)
        if union == 0:
            return 0.0
        return 1.0 - np.count_nonzero(bx & bc) / union
    raise ValueError(f"unknown scale kind: {kind!r}")


def _require_same_support(p: DiscreteDistribution, q: DiscreteDistribution) -> None:
    if len(p) != len(q) or any(
        abs(a - b) > 1e-9 for a, b in zip(p.support, q.support)
    ):
        raise ValueError("distributions must share an identical support")


def divergence(kind: DivergenceKind, p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Divergence from ``p`` to ``q``.

    KL and pearson require identical supports and absolute continuity of
    ``p`` with respect to ``q``; wasserstein1d accepts arbitrary supports and
    returns the order-1 transport cost on the line.
    """
    if kind is DivergenceKind.KL:
        _require_same_support(p, q)
        total = 0.0
        for pm, qm in zip(p.mass, q.mass):
            if pm == 0.0:
                continue
            if qm == 0.0:
                raise ValueError("kl requires q > 0 wherever p > 0")
            total += pm * math.log(pm / qm)
        return max(total, 0.0)
    if kind is DivergenceKind.PEARSON:
        _require_same_support(p, q)
        total = 0.0
        for pm, qm in zip(p.mass, q.mass):
            if qm == 0.0:
                if pm == 0.0:
                    continue
                raise ValueError("pearson requires q > 0 wherever p > 0")
            total += (pm - qm) ** 2 / qm
        return total
    if kind is DivergenceKind.WASSERSTEIN1D:
        return _wasserstein_1d(p, q)
    raise ValueError(f"unknown divergence kind: {kind!r}")


def _cdf_on_grid(dist: DiscreteDistribution, grid: np.ndarray) -> np.ndarray:
    csum = np.concatenate([[0.0], np.cumsum(dist.mass)])
    return csum[np.searchsorted(dist.support, grid, side="right")]


def _wasserstein_1d(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    # Order-1 cost equals the area between the two CDF step functions.
    grid = np.unique(np.concatenate([p.support, q.support]))
    if grid.size < 2:
        return 0.0
    gap = np.abs(_cdf_on_grid(p, grid) - _cdf_on_grid(q, grid))
    return float(np.sum(gap[:-1] * np.diff(grid)))


def entropy(p: DiscreteDistribution) -> float:
    """Shannon entropy of ``p`` in nats; zero-mass atoms contribute nothing."""
    return -math.fsum(m * math.log(m) for m in p.mass if m > 0.0)


def fuzzy_event_probability(membership, p: DiscreteDistribution) -> float:
    """Probability of the fuzzy event described by per-atom memberships."""
    mv = np.asarray(membership, dtype=float).ravel()
    if mv.size != len(p):
        raise ValueError("membership length must equal the support length")
    if np.any(mv < 0.0) or np.any(mv > 1.0):
        raise ValueError("memberships must lie in [0, 1]")
    return float(np.dot(mv, np.asarray(p.mass)))
