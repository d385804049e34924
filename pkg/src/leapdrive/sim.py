"""Deterministic longitudinal driving simulator.

A scripted car-following expert produces demonstration traces, and the
learned controller is evaluated closed-loop on the same kind of scenario.
Integration is forward Euler at a fixed step; neighbor vehicles follow
piecewise-constant speed scripts, so every run is reproducible from the
scenario seed alone.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .control import ActuatorMaps, ControlConfig, DrivingController, MissingKnowledgeError
from .knowledge import (
    DEFAULT_ZONES,
    KnowledgeBase,
    Neighbor,
    ObjectiveParams,
    Snapshot,
    Trace,
    ZoneParams,
    detect_state,
    evaluate_objectives,
    window_sample_count,
)

__all__ = [
    "ExpertParams",
    "NeighborScript",
    "RunMetrics",
    "Scenario",
    "compute_metrics",
    "expert_params_from_dict",
    "expert_params_to_dict",
    "run_controlled",
    "run_expert",
    "scenario_from_dict",
    "scenario_to_dict",
]


@dataclass(frozen=True)
class NeighborScript:
    """Scripted vehicle: fixed lane, piecewise-constant speed over time."""

    position: float
    lane: int
    speed_segments: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        segments = tuple((float(t), float(v)) for t, v in self.speed_segments)
        object.__setattr__(self, "speed_segments", segments)
        if not segments:
            raise ValueError("a neighbor script needs at least one speed segment")
        if segments[0][0] != 0.0:
            raise ValueError("the first speed segment must start at t=0")
        starts = [t for t, _ in segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("segment start times must be strictly ascending")
        if any(v < 0.0 for _, v in segments):
            raise ValueError("scripted speeds must be nonnegative")

    def speed_at(self, t: float) -> float:
        speed = self.speed_segments[0][1]
        for start, value in self.speed_segments:
            if start <= t:
                speed = value
            else:
                break
        return speed


@dataclass(frozen=True)
class Scenario:
    """One reproducible run setup.

    The seed perturbs each neighbor's initial position by an independent
    uniform draw in [-position_jitter, +position_jitter].
    """

    duration: float
    dt: float
    ego_position: float
    ego_speed: float
    ego_lane: int
    neighbors: tuple[NeighborScript, ...] = ()
    rng_seed: int = 0
    position_jitter: float = 5.0
    objectives: ObjectiveParams = field(default_factory=ObjectiveParams)

    def __post_init__(self) -> None:
        object.__setattr__(self, "neighbors", tuple(self.neighbors))
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.duration < self.dt:
            raise ValueError("duration must be at least one step")
        if self.position_jitter < 0.0:
            raise ValueError("position_jitter must be nonnegative")


@dataclass(frozen=True)
class ExpertParams:
    """Car-following demonstration policy parameters."""

    desired_speed: float = 22.0
    time_gap: float = 1.5
    max_accel: float = 2.0
    comfortable_brake: float = 2.0
    min_gap: float = 2.0
    exponent: float = 4.0

    def __post_init__(self) -> None:
        values = (
            self.desired_speed,
            self.time_gap,
            self.max_accel,
            self.comfortable_brake,
            self.min_gap,
            self.exponent,
        )
        if any(v <= 0.0 for v in values):
            raise ValueError("expert parameters must all be positive")


@dataclass(frozen=True)
class RunMetrics:
    """Run-level summary of one trace."""

    collision: bool
    min_gap: float
    mean_time_gap: float
    rms_jerk: float
    mean_speed_error: float
    energy_proxy: float


def _initial_positions(scenario: Scenario) -> list[float]:
    rng = np.random.default_rng(scenario.rng_seed)
    jitter = rng.uniform(
        -scenario.position_jitter, scenario.position_jitter, len(scenario.neighbors)
    )
    return [nb.position + float(j) for nb, j in zip(scenario.neighbors, jitter)]


def _neighbors_at(
    scenario: Scenario, positions: Sequence[float], t: float
) -> tuple[Neighbor, ...]:
    return tuple(
        Neighbor(position=positions[i], speed=nb.speed_at(t), lane=nb.lane)
        for i, nb in enumerate(scenario.neighbors)
    )


def _lead_gap_and_dv(
    snapshot_neighbors: Sequence[Neighbor], ego_position: float, ego_speed: float, lane: int
) -> tuple[float, float] | None:
    best = None
    for nb in snapshot_neighbors:
        if nb.lane != lane:
            continue
        gap = nb.position - ego_position
        if gap >= 0.0 and (best is None or gap < best[0]):
            best = (gap, ego_speed - nb.speed)
    return best


def expert_accel(ego_speed: float, lead: tuple[float, float] | None, p: ExpertParams) -> float:
    """Car-following acceleration: free-road term, minus the gap pressure."""
    free = 1.0 - (ego_speed / p.desired_speed) ** p.exponent
    if lead is None:
        return p.max_accel * free
    gap, dv = lead
    wanted = (
        p.min_gap
        + ego_speed * p.time_gap
        + ego_speed * dv / (2.0 * math.sqrt(p.max_accel * p.comfortable_brake))
    )
    return p.max_accel * (free - (wanted / max(gap, 0.1)) ** 2)


def _advance(
    scenario: Scenario,
    accel_of,
) -> Trace:
    """Shared integration loop; ``accel_of(step, snapshot)`` yields commands."""
    steps = int(round(scenario.duration / scenario.dt))
    dt = scenario.dt
    positions = _initial_positions(scenario)
    ego_pos = float(scenario.ego_position)
    ego_speed = float(scenario.ego_speed)
    samples: list[Snapshot] = []
    for i in range(steps + 1):
        t = i * dt
        neighbors = _neighbors_at(scenario, positions, t)
        provisional = Snapshot(
            time=t,
            ego_position=ego_pos,
            ego_speed=ego_speed,
            ego_accel=0.0,
            ego_lane=scenario.ego_lane,
            neighbors=neighbors,
        )
        commanded = accel_of(i, provisional, samples)
        next_speed = max(0.0, ego_speed + commanded * dt)
        effective = (next_speed - ego_speed) / dt
        samples.append(
            Snapshot(
                time=t,
                ego_position=ego_pos,
                ego_speed=ego_speed,
                ego_accel=effective,
                ego_lane=scenario.ego_lane,
                neighbors=neighbors,
            )
        )
        ego_pos += ego_speed * dt
        for k, nb in enumerate(scenario.neighbors):
            positions[k] += nb.speed_at(t) * dt
        ego_speed = next_speed
    return Trace(tuple(samples))


def run_expert(scenario: Scenario, expert: ExpertParams) -> Trace:
    """Demonstration run under the scripted car-following policy."""

    def accel_of(i: int, snap: Snapshot, history: list[Snapshot]) -> float:
        lead = _lead_gap_and_dv(
            snap.neighbors, snap.ego_position, snap.ego_speed, snap.ego_lane
        )
        return expert_accel(snap.ego_speed, lead, expert)

    return _advance(scenario, accel_of)


def run_controlled(
    scenario: Scenario,
    kb: KnowledgeBase,
    config: ControlConfig,
    maps: ActuatorMaps,
    zones: ZoneParams = DEFAULT_ZONES,
) -> tuple[Trace, RunMetrics]:
    """Closed-loop run of the learned controller.

    Each tick classifies the present state, scores the objectives over the
    trailing completed window, and applies the controller's command; the ego
    coasts until enough history exists for the window.  A missing knowledge
    entry aborts with the state spelled out.  The scenario's objective
    parameters override any carried by the control config so evaluation and
    adjustment agree.
    """
    config = dataclasses.replace(config, objectives=scenario.objectives)
    controller = DrivingController(kb, config, maps)
    window_n = window_sample_count(kb.window_seconds, scenario.dt)

    def accel_of(i: int, snap: Snapshot, history: list[Snapshot]) -> float:
        # Engage as soon as the trailing window can score jerk; until the
        # full window length is available the window simply grows.
        if len(history) < 3:
            return 0.0
        window = history[-min(window_n, len(history)) :]
        state = detect_state(snap, zones)
        observed = evaluate_objectives(window, scenario.objectives)
        command, _, _ = controller.step(observed, state, snap.ego_speed)
        return command.accel_command

    trace = _advance(scenario, accel_of)
    return trace, compute_metrics(trace, scenario.objectives)


def compute_metrics(trace: Trace, params: ObjectiveParams) -> RunMetrics:
    """Pure run-level metrics from the kinematics of a finished trace."""
    if len(trace) < 3:
        raise ValueError("metrics need at least 3 samples")
    dt = trace.dt
    speeds = np.array([s.ego_speed for s in trace.samples])
    accels = np.array([s.ego_accel for s in trace.samples])
    rms_jerk = float(np.sqrt(np.mean((np.diff(accels) / dt) ** 2)))
    mean_speed_error = float(np.mean(np.abs(speeds - params.desired_speed)))
    energy_proxy = float(np.mean(np.maximum(accels, 0.0) * speeds))

    min_gap = math.inf
    time_gaps = []
    collision = False
    previous_offsets: dict[int, float] = {}
    for snap in trace.samples:
        offsets: dict[int, float] = {}
        for idx, nb in enumerate(snap.neighbors):
            if nb.lane != snap.ego_lane:
                continue
            offset = nb.position - snap.ego_position
            offsets[idx] = offset
            if offset == 0.0:
                collision = True
            prior = previous_offsets.get(idx)
            if prior is not None and (prior > 0.0) != (offset > 0.0):
                collision = True
        previous_offsets = offsets
        ahead = [off for off in offsets.values() if off >= 0.0]
        if ahead:
            gap = min(ahead)
            min_gap = min(min_gap, gap)
            if snap.ego_speed >= 0.5:
                time_gaps.append(gap / snap.ego_speed)
    mean_time_gap = float(np.mean(time_gaps)) if time_gaps else math.nan
    return RunMetrics(
        collision=collision,
        min_gap=min_gap,
        mean_time_gap=mean_time_gap,
        rms_jerk=rms_jerk,
        mean_speed_error=mean_speed_error,
        energy_proxy=energy_proxy,
    )


# --- JSON codecs -------------------------------------------------------------


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "duration": scenario.duration,
        "dt": scenario.dt,
        "ego": {
            "position": scenario.ego_position,
            "speed": scenario.ego_speed,
            "lane": scenario.ego_lane,
        },
        "neighbors": [
            {
                "position": nb.position,
                "lane": nb.lane,
                "speed_segments": [list(seg) for seg in nb.speed_segments],
            }
            for nb in scenario.neighbors
        ],
        "rng_seed": scenario.rng_seed,
        "position_jitter": scenario.position_jitter,
        "objectives": {
            "desired_speed": scenario.objectives.desired_speed,
            "max_brake": scenario.objectives.max_brake,
            "max_accel": scenario.objectives.max_accel,
            "headway_cap": scenario.objectives.headway_cap,
            "margin_cap": scenario.objectives.margin_cap,
        },
    }


def scenario_from_dict(doc: dict) -> Scenario:
    ego = doc["ego"]
    neighbors = tuple(
        NeighborScript(
            position=float(nb["position"]),
            lane=int(nb["lane"]),
            speed_segments=tuple(tuple(seg) for seg in nb["speed_segments"]),
        )
        for nb in doc.get("neighbors", [])
    )
    objectives = ObjectiveParams(**doc.get("objectives", {}))
    return Scenario(
        duration=float(doc["duration"]),
        dt=float(doc["dt"]),
        ego_position=float(ego["position"]),
        ego_speed=float(ego["speed"]),
        ego_lane=int(ego["lane"]),
        neighbors=neighbors,
        rng_seed=int(doc.get("rng_seed", 0)),
        position_jitter=float(doc.get("position_jitter", 5.0)),
        objectives=objectives,
    )


def expert_params_to_dict(params: ExpertParams) -> dict:
    return {
        "desired_speed": params.desired_speed,
        "time_gap": params.time_gap,
        "max_accel": params.max_accel,
        "comfortable_brake": params.comfortable_brake,
        "min_gap": params.min_gap,
        "exponent": params.exponent,
    }


def expert_params_from_dict(doc: dict) -> ExpertParams:
    return ExpertParams(**doc)
