"""Probability-leap distances, self-organizing mode learning, and driving knowledge acquisition."""

from .fuzzy import MappingSpecSet, MembershipSpec, astrict, optimal_control_point
from .leap import (
    DeviationProfile,
    DistributionSummary,
    TwoSidedProfile,
    delta_margin,
    leap_distance,
    profile_from_samples,
)
from .scales import (
    DiscreteDistribution,
    DivergenceKind,
    GaussianSummary,
    ScaleKind,
    divergence,
    entropy,
    fuzzy_event_probability,
    scale_distance,
)
from .selforg import SOConfig, SOResult, fit_summary, self_organize

__version__ = "0.1.0"
