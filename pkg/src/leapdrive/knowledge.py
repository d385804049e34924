"""Driving states, objective evaluation, and the learned knowledge base.

Expert traces are swept with a sliding window; each window is labeled with
the driving state at its last snapshot and scored on six objectives.  Pooled
per (state, objective), the window values are fed to the self-organizing
learner, and the resulting distribution summaries form the knowledge base
persisted as a versioned JSON document.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .leap import DeviationProfile, DistributionSummary, TwoSidedProfile
from .selforg import SOConfig, fit_summary

__all__ = [
    "DEFAULT_ZONES",
    "KB_FORMAT_VERSION",
    "KBSchemaError",
    "KBVersionError",
    "DrivingState",
    "KnowledgeBase",
    "LearnConfig",
    "Neighbor",
    "ObjectiveKind",
    "ObjectiveParams",
    "ObjectiveVector",
    "Snapshot",
    "Trace",
    "ZoneParams",
    "detect_state",
    "evaluate_objectives",
    "learn_knowledge",
    "load_kb",
    "read_trace_csv",
    "save_kb",
    "window_sample_count",
    "write_trace_csv",
]

KB_FORMAT_VERSION = 1
MAX_CSV_NEIGHBORS = 4


class KBVersionError(ValueError):
    """Persisted knowledge base has an unsupported format version."""


class KBSchemaError(ValueError):
    """Persisted knowledge base is malformed or truncated."""


class DrivingState(enum.IntEnum):
    """Ego-relative neighbor configuration, one per snapshot."""

    FREE_ROAD = 1
    LEFT_BEHIND = 2
    LEFT_FRONT = 3
    LEFT_SIDE = 4
    RIGHT_BEHIND = 5
    RIGHT_FRONT = 6
    RIGHT_SIDE = 7
    FRONT = 8
    BEHIND = 9


class ObjectiveKind(enum.Enum):
    ENERGY = "energy"
    SAFETY = "safety"
    HEADWAY = "headway"
    COMFORT = "comfort"
    QUICKNESS = "quickness"
    STOPPING_MARGIN = "stopping_margin"


OBJECTIVE_ORDER: tuple[ObjectiveKind, ...] = tuple(ObjectiveKind)

# Tie-break priority when two matching neighbors are equally near.
_STATE_PRIORITY = {
    DrivingState.FRONT: 0,
    DrivingState.BEHIND: 1,
    DrivingState.LEFT_SIDE: 2,
    DrivingState.RIGHT_SIDE: 3,
    DrivingState.LEFT_FRONT: 4,
    DrivingState.RIGHT_FRONT: 5,
    DrivingState.LEFT_BEHIND: 6,
    DrivingState.RIGHT_BEHIND: 7,
}


class Neighbor(NamedTuple):
    position: float
    speed: float
    lane: int


@dataclass(frozen=True)
class Snapshot:
    """One timestamped kinematic sample of ego plus visible neighbors."""

    time: float
    ego_position: float
    ego_speed: float
    ego_accel: float
    ego_lane: int
    neighbors: tuple[Neighbor, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "neighbors", tuple(self.neighbors))
        if self.ego_speed < 0.0:
            raise ValueError("ego_speed must be nonnegative")


@dataclass(frozen=True)
class Trace:
    """Snapshots at a uniform time step."""

    samples: tuple[Snapshot, ...]

    def __post_init__(self) -> None:
        samples = tuple(self.samples)
        object.__setattr__(self, "samples", samples)
        if len(samples) < 2:
            raise ValueError("a trace needs at least 2 samples")
        dt = samples[1].time - samples[0].time
        for a, b in zip(samples, samples[1:]):
            if abs((b.time - a.time) - dt) > 1e-9:
                raise ValueError("trace time step must be uniform within 1e-9")

    @property
    def dt(self) -> float:
        return self.samples[1].time - self.samples[0].time

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class ZoneParams:
    """Gap thresholds that carve the neighborhood into state zones (meters)."""

    front_gap: float = 60.0
    behind_gap: float = 30.0
    side_halfwidth: float = 10.0


DEFAULT_ZONES = ZoneParams()


def detect_state(snapshot: Snapshot, zones: ZoneParams = DEFAULT_ZONES) -> DrivingState:
    """Classify the snapshot into exactly one driving state.

    Matching neighbors compete by longitudinal nearness; exact ties fall back
    to a fixed priority (front, behind, sides, then diagonals).  A neighbor
    outside every zone, or beyond the adjacent lanes, is ignored.
    """
    candidates: list[tuple[float, int, DrivingState]] = []
    for nb in snapshot.neighbors:
        dpos = nb.position - snapshot.ego_position
        dlane = nb.lane - snapshot.ego_lane
        if dlane == 0:
            if 0.0 <= dpos < zones.front_gap:
                state = DrivingState.FRONT
            elif -zones.behind_gap < dpos < 0.0:
                state = DrivingState.BEHIND
            else:
                continue
        elif abs(dlane) == 1:
            left = dlane == -1
            if abs(dpos) < zones.side_halfwidth:
                state = DrivingState.LEFT_SIDE if left else DrivingState.RIGHT_SIDE
            elif zones.side_halfwidth <= dpos < zones.front_gap:
                state = DrivingState.LEFT_FRONT if left else DrivingState.RIGHT_FRONT
            elif zones.side_halfwidth <= -dpos < zones.behind_gap:
                state = DrivingState.LEFT_BEHIND if left else DrivingState.RIGHT_BEHIND
            else:
                continue
        else:
            continue
        candidates.append((abs(dpos), _STATE_PRIORITY[state], state))
    if not candidates:
        return DrivingState.FREE_ROAD
    return min(candidates)[2]


@dataclass(frozen=True)
class ObjectiveParams:
    """Reference values and caps for the six objective formulas.

    ``lead_range`` bounds how far ahead a same-lane car still counts as the
    lead, matching the front state zone so state labels and objective values
    stay consistent; the caps are sentinels standing in for "no lead".
    """

    desired_speed: float = 22.0
    max_brake: float = 4.0
    max_accel: float = 2.0
    headway_cap: float = 10.0
    margin_cap: float = 500.0
    lead_range: float = 60.0

    def __post_init__(self) -> None:
        if min(self.desired_speed, self.max_brake, self.max_accel) <= 0.0:
            raise ValueError("speeds and acceleration bounds must be positive")
        if min(self.headway_cap, self.margin_cap, self.lead_range) <= 0.0:
            raise ValueError("caps and lead_range must be positive")


@dataclass(frozen=True)
class ObjectiveVector:
    """Six per-window objective values."""

    energy: float
    safety: float
    headway: float
    comfort: float
    quickness: float
    stopping_margin: float

    def value(self, kind: ObjectiveKind) -> float:
        return getattr(self, kind.value)

    def as_dict(self) -> dict[ObjectiveKind, float]:
        return {kind: self.value(kind) for kind in OBJECTIVE_ORDER}


def _lead(snapshot: Snapshot, lead_range: float) -> Neighbor | None:
    """Nearest same-lane neighbor at or ahead of the ego, within range."""
    best = None
    best_gap = math.inf
    for nb in snapshot.neighbors:
        if nb.lane != snapshot.ego_lane:
            continue
        gap = nb.position - snapshot.ego_position
        if 0.0 <= gap < lead_range and gap < best_gap:
            best, best_gap = nb, gap
    return best


def evaluate_objectives(
    window: Sequence[Snapshot], params: ObjectiveParams
) -> ObjectiveVector:
    """Score one sliding window on the six driving objectives.

    energy: mean positive-acceleration power per unit mass.
    safety: worst inverse time-to-collision toward the same-lane lead.
    headway: mean time gap, capped when crawling or with no lead ahead.
    comfort: root-mean-square jerk.
    quickness: mean absolute deviation from the desired speed.
    stopping_margin: worst gap surplus over the braking distance, with a
    sentinel cap when no lead exists.
    """
    if len(window) < 3:
        raise ValueError("objective window needs at least 3 samples")
    dt = window[1].time - window[0].time
    speeds = np.array([s.ego_speed for s in window])
    accels = np.array([s.ego_accel for s in window])

    energy = float(np.mean(np.maximum(accels, 0.0) * speeds))
    comfort = float(np.sqrt(np.mean((np.diff(accels) / dt) ** 2)))
    quickness = float(np.mean(np.abs(speeds - params.desired_speed)))

    worst_inv_ttc = 0.0
    headways = []
    margin = math.inf
    saw_lead = False
    for snap in window:
        lead = _lead(snap, params.lead_range)
        if lead is None:
            headways.append(params.headway_cap)
            continue
        saw_lead = True
        gap = max(lead.position - snap.ego_position, 1e-2)
        closing = snap.ego_speed - lead.speed
        if closing > 0.0:
            worst_inv_ttc = max(worst_inv_ttc, closing / gap)
        if snap.ego_speed < 0.5:
            headways.append(params.headway_cap)
        else:
            headways.append(gap / snap.ego_speed)
        margin = min(margin, gap - snap.ego_speed**2 / (2.0 * params.max_brake))

    return ObjectiveVector(
        energy=energy,
        safety=worst_inv_ttc,
        headway=float(np.mean(headways)),
        comfort=comfort,
        quickness=quickness,
        stopping_margin=float(margin) if saw_lead else params.margin_cap,
    )


@dataclass(frozen=True)
class KnowledgeBase:
    """Per (driving state, objective) distribution summaries."""

    entries: dict[tuple[DrivingState, ObjectiveKind], DistributionSummary]
    window_seconds: float
    format_version: int = KB_FORMAT_VERSION

    def __post_init__(self) -> None:
        if self.window_seconds <= 0.0:
            raise ValueError("window_seconds must be positive")
        for (state, kind), summary in self.entries.items():
            if summary.sample_count < 1:
                raise ValueError(
                    f"entry ({state.name}, {kind.value}) has no samples behind it"
                )

    def states(self) -> tuple[DrivingState, ...]:
        return tuple(sorted({state for state, _ in self.entries}))

    def entry(self, state: DrivingState, kind: ObjectiveKind) -> DistributionSummary:
        return self.entries[(state, kind)]


@dataclass(frozen=True)
class LearnConfig:
    """Everything the trace-to-knowledge pass needs."""

    so: SOConfig
    window_seconds: float
    segment_count: int = 3
    coverage: float = 0.99
    zones: ZoneParams = DEFAULT_ZONES
    objectives: ObjectiveParams = field(default_factory=ObjectiveParams)

    def __post_init__(self) -> None:
        if self.window_seconds <= 0.0:
            raise ValueError("window_seconds must be positive")
        if self.segment_count < 1:
            raise ValueError("segment_count must be at least 1")


def window_sample_count(window_seconds: float, dt: float) -> int:
    """Snapshots in one sliding window; jerk needs at least 3."""
    return max(3, int(round(window_seconds / dt)) + 1)


def learn_knowledge(traces: Sequence[Trace], config: LearnConfig) -> KnowledgeBase:
    """Slide windows over the traces and fit one summary per (state, objective).

    Windows advance one snapshot at a time and take the state of their last
    snapshot as label.  Pooled values are sorted before fitting, so the result
    does not depend on trace order or any internal scheduling.
    """
    if not traces:
        raise ValueError("at least one trace is required")
    pools: dict[tuple[DrivingState, ObjectiveKind], list[float]] = {}
    total_windows = 0
    for trace in traces:
        n = window_sample_count(config.window_seconds, trace.dt)
        if len(trace) < n:
            continue
        for end in range(n - 1, len(trace)):
            window = trace.samples[end - n + 1 : end + 1]
            state = detect_state(window[-1], config.zones)
            values = evaluate_objectives(window, config.objectives)
            total_windows += 1
            for kind in OBJECTIVE_ORDER:
                pools.setdefault((state, kind), []).append(values.value(kind))
    if total_windows == 0:
        raise ValueError("no trace is long enough for the requested window")
    entries = {}
    for key in sorted(pools, key=lambda k: (k[0], OBJECTIVE_ORDER.index(k[1]))):
        samples = sorted(pools[key])
        entries[key] = fit_summary(
            samples, config.so, config.segment_count, config.coverage
        )
    return KnowledgeBase(entries=entries, window_seconds=config.window_seconds)


# --- persistence -----------------------------------------------------------


def _profile_to_dict(profile: DeviationProfile) -> dict:
    return {"boundaries": list(profile.boundaries), "masses": list(profile.masses)}


def _profile_from_dict(doc: dict) -> DeviationProfile:
    return DeviationProfile(tuple(doc["boundaries"]), tuple(doc["masses"]))


def summary_to_dict(summary: DistributionSummary) -> dict:
    return {
        "center": summary.center,
        "sample_count": summary.sample_count,
        "dispersion": summary.dispersion,
        "profile_above": _profile_to_dict(summary.profile.above),
        "profile_below": _profile_to_dict(summary.profile.below),
    }


def summary_from_dict(doc: dict) -> DistributionSummary:
    return DistributionSummary(
        center=float(doc["center"]),
        profile=TwoSidedProfile(
            above=_profile_from_dict(doc["profile_above"]),
            below=_profile_from_dict(doc["profile_below"]),
        ),
        sample_count=int(doc["sample_count"]),
        dispersion=float(doc["dispersion"]),
    )


def atomic_write_text(path, text: str) -> None:
    """Write-then-rename so concurrent readers never see partial files."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def save_kb(kb: KnowledgeBase, path) -> None:
    entries = []
    order = sorted(kb.entries, key=lambda k: (k[0], OBJECTIVE_ORDER.index(k[1])))
    for state, kind in order:
        doc = {"state": state.name.lower(), "objective": kind.value}
        doc.update(summary_to_dict(kb.entries[(state, kind)]))
        entries.append(doc)
    document = {
        "format_version": kb.format_version,
        "window_seconds": kb.window_seconds,
        "entries": entries,
    }
    atomic_write_text(path, json.dumps(document, indent=2) + "\n")


def load_kb(path) -> KnowledgeBase:
    try:
        document = json.loads(Path(path).read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise KBSchemaError(f"not a valid knowledge base document: {exc}") from exc
    if not isinstance(document, dict) or "format_version" not in document:
        raise KBSchemaError("missing format_version")
    version = document["format_version"]
    if version != KB_FORMAT_VERSION:
        raise KBVersionError(
            f"unsupported format_version {version}; expected {KB_FORMAT_VERSION}"
        )
    try:
        entries = {}
        for doc in document["entries"]:
            state = DrivingState[doc["state"].upper()]
            kind = ObjectiveKind(doc["objective"])
            entries[(state, kind)] = summary_from_dict(doc)
        return KnowledgeBase(
            entries=entries,
            window_seconds=float(document["window_seconds"]),
            format_version=version,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, KBVersionError):
            raise
        raise KBSchemaError(f"malformed knowledge base entry: {exc}") from exc


# --- trace CSV ---------------------------------------------------------------

TRACE_CSV_HEADER = ["t", "ego_pos", "ego_speed", "ego_accel", "ego_lane"] + [
    f"n{i}_{leaf}" for i in range(1, MAX_CSV_NEIGHBORS + 1) for leaf in ("pos", "speed", "lane")
]


def write_trace_csv(trace: Trace, path) -> None:
    """Emit the fixed 17-column layout; absent neighbors leave empty fields."""
    rows = []
    for snap in trace.samples:
        if len(snap.neighbors) > MAX_CSV_NEIGHBORS:
            raise ValueError(f"trace CSV supports at most {MAX_CSV_NEIGHBORS} neighbors")
        row = [
            repr(snap.time),
            repr(snap.ego_position),
            repr(snap.ego_speed),
            repr(snap.ego_accel),
            str(snap.ego_lane),
        ]
        for i in range(MAX_CSV_NEIGHBORS):
            if i < len(snap.neighbors):
                nb = snap.neighbors[i]
                row += [repr(nb.position), repr(nb.speed), str(nb.lane)]
            else:
                row += ["", "", ""]
        rows.append(row)
    lines = [",".join(TRACE_CSV_HEADER)] + [",".join(r) for r in rows]
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_trace_csv(path) -> Trace:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != TRACE_CSV_HEADER:
            raise ValueError(f"unexpected trace CSV header in {path}")
        samples = []
        for row in reader:
            if not row:
                continue
            neighbors = []
            for i in range(MAX_CSV_NEIGHBORS):
                base = 5 + 3 * i
                if row[base] == "":
                    continue
                neighbors.append(
                    Neighbor(float(row[base]), float(row[base + 1]), int(row[base + 2]))
                )
            samples.append(
                Snapshot(
                    time=float(row[0]),
                    ego_position=float(row[1]),
                    ego_speed=float(row[2]),
                    ego_accel=float(row[3]),
                    ego_lane=int(row[4]),
                    neighbors=tuple(neighbors),
                )
            )
    return Trace(tuple(samples))
