"""Online multi-target adjustment around learned expert behavior.

Each tick the observed objective values are measured against the knowledge
base with the leap distance, normalized by a rolling self-organized scale of
the recent distances, gated by the hand-set threshold's odd/even rule, and
turned into one bounded longitudinal acceleration command through learned
speed-dependent gains.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .knowledge import (
    OBJECTIVE_ORDER,
    DrivingState,
    KnowledgeBase,
    ObjectiveKind,
    ObjectiveParams,
    ObjectiveVector,
)
from .leap import leap_distance
from .selforg import SOConfig, self_organize

__all__ = [
    "SCALE_EPSILON",
    "ActuatorCommand",
    "ActuatorMap",
    "ActuatorMaps",
    "AdjustmentPlan",
    "ControlConfig",
    "DistanceVector",
    "DrivingController",
    "MissingKnowledgeError",
    "NudgeGains",
    "PlanTarget",
    "adjust",
    "decide",
    "learn_actuator_map",
    "learn_online_scale",
    "perceive",
]

# Floor added to the rolling scale so normalization stays total.
SCALE_EPSILON = 1e-6


class MissingKnowledgeError(KeyError):
    """The knowledge base lacks an entry the controller needs."""


@dataclass(frozen=True)
class DistanceVector:
    """Per-objective raw and normalized leap distances plus the targets."""

    raw: dict[ObjectiveKind, float]
    normalized: dict[ObjectiveKind, float]
    center: dict[ObjectiveKind, float]

    def __post_init__(self) -> None:
        for mapping in (self.raw, self.normalized):
            if any(v < 0.0 for v in mapping.values()):
                raise ValueError("distances must be nonnegative")


class PlanTarget(NamedTuple):
    objective: ObjectiveKind
    distance: float
    target_value: float


@dataclass(frozen=True)
class AdjustmentPlan:
    """Objectives selected for adjustment; empty or odd by construction."""

    targets: tuple[PlanTarget, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.targets and len(self.targets) % 2 == 0:
            raise ValueError("a nonempty plan must target an odd number of objectives")

    def objectives(self) -> tuple[ObjectiveKind, ...]:
        return tuple(t.objective for t in self.targets)


@dataclass(frozen=True)
class ActuatorMap:
    """Piecewise-linear speed-to-gain lookup, clamped outside the knots."""

    knots: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        knots = tuple((float(s), float(g)) for s, g in self.knots)
        object.__setattr__(self, "knots", knots)
        if len(knots) < 2:
            raise ValueError("an actuator map needs at least 2 knots")
        speeds = [s for s, _ in knots]
        if any(b <= a for a, b in zip(speeds, speeds[1:])):
            raise ValueError("knot speeds must be strictly ascending")
        if any(g <= 0.0 for _, g in knots):
            raise ValueError("gains must be positive")

    def gain_at(self, speed: float) -> float:
        speeds = [s for s, _ in self.knots]
        gains = [g for _, g in self.knots]
        return float(np.interp(speed, speeds, gains))


class ActuatorMaps(NamedTuple):
    brake: ActuatorMap
    accel: ActuatorMap


@dataclass(frozen=True)
class ActuatorCommand:
    """Longitudinal acceleration command, already clamped to bounds."""

    accel_command: float


@dataclass(frozen=True)
class NudgeGains:
    """Per-objective error-to-acceleration gains and damping strengths.

    The quickness gain applies to the excess deviation normalized by the
    learned per-state tolerance, so speed tracking is assertive where the
    expert tracked tightly and relaxed where the expert tolerated drift.
    Headway defense (too close) uses the full gain; catching back up to an
    opened gap uses the gentler catch-up gain.
    """

    headway: float = 0.4
    headway_catchup: float = 0.12
    stopping_margin: float = 0.01
    safety: float = 4.0
    quickness: float = 0.6
    energy_damp: float = 0.5
    comfort_damp: float = 0.5


@dataclass(frozen=True)
class ControlConfig:
    """Controller knobs; gains and bounds come from the scenario config."""

    zeta: float
    objectives: ObjectiveParams = field(default_factory=ObjectiveParams)
    ml2_window: int = 50
    so: SOConfig = field(
        default_factory=lambda: SOConfig(window_halfwidth=0.5, max_iterations=100)
    )
    gains: NudgeGains = field(default_factory=NudgeGains)

    def __post_init__(self) -> None:
        if self.zeta <= 0.0:
            raise ValueError("zeta must be positive")
        if self.ml2_window < 1:
            raise ValueError("ml2_window must be at least 1")


def perceive(
    observed: ObjectiveVector,
    kb: KnowledgeBase,
    state: DrivingState,
    scales: Mapping[ObjectiveKind, float] | None = None,
) -> DistanceVector:
    """Leap distance of each observed objective from its learned summary.

    ``scales`` holds the rolling self-organized scale per objective (see
    :func:`learn_online_scale`); without it the raw distances are normalized
    by the bare epsilon floor.
    """
    raw: dict[ObjectiveKind, float] = {}
    normalized: dict[ObjectiveKind, float] = {}
    centers: dict[ObjectiveKind, float] = {}
    for kind in OBJECTIVE_ORDER:
        key = (state, kind)
        if key not in kb.entries:
            raise MissingKnowledgeError(
                f"knowledge base has no entry for state {state.name} / {kind.value}"
            )
        summary = kb.entries[key]
        distance = leap_distance(
            [observed.value(kind)], [summary.center], [summary]
        )
        scale = float(scales.get(kind, 0.0)) if scales else 0.0
        raw[kind] = distance
        normalized[kind] = distance / (scale + SCALE_EPSILON)
        centers[kind] = summary.center
    return DistanceVector(raw=raw, normalized=normalized, center=centers)


def learn_online_scale(
    recent_distances: Mapping[ObjectiveKind, Sequence[float]],
    config: SOConfig,
) -> dict[ObjectiveKind, float]:
    """Self-organized scale of each objective's recent raw distances."""
    scales = {}
    for kind, window in recent_distances.items():
        values = np.asarray(window, dtype=float)
        if values.size == 0:
            raise ValueError(f"empty distance window for {kind.value}")
        result = self_organize(values, float(np.median(values)), config)
        scales[kind] = result.scale_value
    return scales


def decide(distances: DistanceVector, zeta_threshold: float) -> AdjustmentPlan:
    """Select objectives by the threshold rule on normalized distances.

    An odd number of exceedances adjusts them all; an even, nonzero number
    adjusts only the objective with the maximal normalized distance (ties
    resolve in objective declaration order); none means no adjustment.
    """
    if zeta_threshold <= 0.0:
        raise ValueError("zeta_threshold must be positive")
    exceeding = [
        kind
        for kind in OBJECTIVE_ORDER
        if distances.normalized[kind] > zeta_threshold
    ]
    if not exceeding:
        return AdjustmentPlan()
    if len(exceeding) % 2 == 0:
        top = exceeding[0]
        for kind in exceeding[1:]:
            if distances.normalized[kind] > distances.normalized[top]:
                top = kind
        exceeding = [top]
    targets = tuple(
        PlanTarget(kind, distances.normalized[kind], distances.center[kind])
        for kind in exceeding
    )
    return AdjustmentPlan(targets)


def adjust(
    plan: AdjustmentPlan,
    observed: ObjectiveVector,
    maps: ActuatorMaps,
    ego_speed: float,
    config: ControlConfig,
) -> ActuatorCommand:
    """Turn the planned objective errors into one bounded acceleration.

    Headway, stopping margin, and safety act through the gap dynamics (too
    close or too risky means brake); quickness pushes toward the desired
    speed but yields whenever the gap objectives jointly demand braking;
    energy and comfort only damp the combined nudge.  A gap objective whose
    learned target sits at its sentinel cap encodes "no lead was typical
    here" and is not chased.  The summed nudge is scaled by the
    speed-interpolated brake or accelerator gain and clamped.
    """
    if not plan.targets:
        return ActuatorCommand(0.0)
    gains = config.gains
    params = config.objectives
    gap_nudge = 0.0
    speed_nudge = 0.0
    damp = 1.0
    for target in plan.targets:
        error = target.target_value - observed.value(target.objective)
        kind = target.objective
        if kind is ObjectiveKind.HEADWAY:
            if target.target_value < params.headway_cap * (1.0 - 1e-9):
                rate = gains.headway if error > 0.0 else gains.headway_catchup
                gap_nudge -= rate * error
        elif kind is ObjectiveKind.STOPPING_MARGIN:
            if target.target_value < params.margin_cap * (1.0 - 1e-9):
                gap_nudge -= gains.stopping_margin * error
        elif kind is ObjectiveKind.SAFETY:
            gap_nudge += gains.safety * error
        elif kind is ObjectiveKind.QUICKNESS:
            excess = max(0.0, -error) / (1.0 + abs(target.target_value))
            speed_nudge += math.copysign(
                gains.quickness * excess, params.desired_speed - ego_speed
            )
        elif kind is ObjectiveKind.ENERGY:
            relative = max(0.0, -error) / (abs(target.target_value) + 1.0)
            damp /= 1.0 + gains.energy_damp * min(relative, 1.0)
        elif kind is ObjectiveKind.COMFORT:
            relative = max(0.0, -error) / (abs(target.target_value) + 1.0)
            damp /= 1.0 + gains.comfort_damp * min(relative, 1.0)
    if gap_nudge < 0.0 and speed_nudge > 0.0:
        speed_nudge = 0.0
    total = (gap_nudge + speed_nudge) * damp
    gain = maps.brake.gain_at(ego_speed) if total < 0.0 else maps.accel.gain_at(ego_speed)
    command = min(max(total * gain, -params.max_brake), params.max_accel)
    return ActuatorCommand(command)


def learn_actuator_map(samples: Sequence[tuple[float, float]]) -> ActuatorMap:
    """Fit the speed-to-gain lookup from observed (speed, achieved gain) pairs.

    Duplicate speeds are averaged; queries outside the sampled range clamp to
    the end knots.
    """
    by_speed: dict[float, list[float]] = {}
    for speed, gain in samples:
        if gain <= 0.0:
            raise ValueError("achieved gains must be positive")
        by_speed.setdefault(float(speed), []).append(float(gain))
    if len(by_speed) < 2:
        raise ValueError("need samples at 2 or more distinct speeds")
    knots = tuple(
        (speed, float(np.mean(by_speed[speed]))) for speed in sorted(by_speed)
    )
    return ActuatorMap(knots)


class DrivingController:
    """Single-vehicle state machine over the rolling distance windows."""

    def __init__(self, kb: KnowledgeBase, config: ControlConfig, maps: ActuatorMaps):
        self.kb = kb
        self.config = config
        self.maps = maps
        self._windows: dict[ObjectiveKind, deque[float]] = {
            kind: deque(maxlen=config.ml2_window) for kind in OBJECTIVE_ORDER
        }

    def step(
        self, observed: ObjectiveVector, state: DrivingState, ego_speed: float
    ) -> tuple[ActuatorCommand, DistanceVector, AdjustmentPlan]:
        base = perceive(observed, self.kb, state)
        for kind in OBJECTIVE_ORDER:
            self._windows[kind].append(base.raw[kind])
        scales = learn_online_scale(self._windows, self.config.so)
        distances = replace(
            base,
            normalized={
                kind: base.raw[kind] / (scales[kind] + SCALE_EPSILON)
                for kind in OBJECTIVE_ORDER
            },
        )
        plan = decide(distances, self.config.zeta)
        command = adjust(plan, observed, self.maps, ego_speed, self.config)
        return command, distances, plan
