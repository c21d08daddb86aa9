"""Core value types and the tracker configuration."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

from .errors import ConfigError, NonFiniteField, NonPositiveExtent, ScoreOutOfRange


class UpdateFn(str, Enum):
    OVERWRITE = "overwrite"
    ADD = "add"
    MAX = "max"
    COMPLEMENT_MULT = "complement_mult"
    COMPLEMENT_PARALLEL = "complement_parallel"


class Matcher(str, Enum):
    GREEDY = "greedy"
    HUNGARIAN = "hungarian"


class Metric(str, Enum):
    EUCLIDEAN_2D = "euclidean_2d"
    EUCLIDEAN_3D = "euclidean_3d"
    MAHALANOBIS = "mahalanobis"


class FilterKind(str, Enum):
    POINT_TRACKER = "point_tracker"
    KALMAN_CVCA = "kalman_cvca"


class LifecycleMode(str, Enum):
    COUNT_BASED = "count_based"
    CONFIDENCE_BASED = "confidence_based"
    MIXED = "mixed"


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True, slots=True)
class Detection:
    frame_index: int
    class_label: str
    cx: float
    cy: float
    cz: float
    length: float
    width: float
    height: float
    yaw: float
    score: float
    sequence: str = ""

    @property
    def center(self) -> tuple[float, float, float]:
        return (self.cx, self.cy, self.cz)


def validate_detection(d: Detection) -> Detection:
    """Check a detection and return it with its yaw wrapped into (-pi, pi]."""
    for name in ("cx", "cy", "cz", "length", "width", "height", "yaw", "score"):
        if not math.isfinite(getattr(d, name)):
            raise NonFiniteField(f"detection field {name!r} is not finite")
    if d.frame_index < 0:
        raise NonFiniteField("frame_index must be non-negative")
    if min(d.length, d.width, d.height) <= 0:
        raise NonPositiveExtent(
            f"box extent must be positive, got ({d.length}, {d.width}, {d.height})"
        )
    if not 0.0 <= d.score <= 1.0:
        raise ScoreOutOfRange(f"score {d.score} outside [0, 1]")
    yaw = normalize_angle(d.yaw)
    if yaw == d.yaw:
        return d
    return dataclasses.replace(d, yaw=yaw)


@dataclass(slots=True)
class Tracklet:
    """A live object hypothesis.

    ``state`` is owned by the motion filter (see :mod:`scoretrack.filters`);
    extent, yaw and z always mirror the latest matched detection.
    """

    id: int
    class_label: str
    state: Any
    box_extent: tuple[float, float, float]
    yaw: float
    score: float
    active: bool
    hits: int = 1
    misses: int = 0
    age: int = 0

    def copy(self) -> "Tracklet":
        return self.with_()

    def with_(self, **changes) -> "Tracklet":
        """Copy with some fields replaced (a cheap ``dataclasses.replace``)."""
        new = Tracklet(self.id, self.class_label, self.state, self.box_extent, self.yaw,
                       self.score, self.active, self.hits, self.misses, self.age)
        for k, v in changes.items():
            setattr(new, k, v)
        return new


@dataclass(frozen=True, slots=True)
class AssignmentResult:
    matches: tuple[tuple[int, int, float], ...] = ()
    unmatched_detections: tuple[int, ...] = ()
    unmatched_tracklets: tuple[int, ...] = ()


_DEFAULT_GATES = {
    Metric.EUCLIDEAN_2D: 2.0,
    Metric.EUCLIDEAN_3D: 2.0,
    # chi-square, 2 dof, 99%
    Metric.MAHALANOBIS: 9.21,
}


def _enum(cls, value, key):
    if isinstance(value, cls):
        return value
    try:
        return cls(value)
    except ValueError:
        allowed = ", ".join(m.value for m in cls)
        raise ConfigError(f"{key}: unknown value {value!r} (expected one of {allowed})") from None


@dataclass(frozen=True)
class TrackerConfig:
    """Every tunable of a tracking run.

    Defaults reproduce the classic count-based starting point: overwrite
    scores, no decay, max-age 3, min-hits 1, greedy matching on ground-plane
    Euclidean distance with a point tracker. ``max_age=None`` means unbounded.
    ``gate=None`` selects the metric's default (2 m Euclidean, 9.21 squared
    Mahalanobis).
    """

    update_fn: UpdateFn = UpdateFn.OVERWRITE
    score_decay: float = 0.0
    detection_threshold: float = 0.0
    deletion_threshold: float = 0.0
    active_threshold: float = 1.0
    max_age: int | None = 3
    min_hits: int = 1
    lifecycle: LifecycleMode = LifecycleMode.COUNT_BASED
    matcher: Matcher = Matcher.GREEDY
    metric: Metric = Metric.EUCLIDEAN_2D
    gate: float | None = None
    filter_kind: FilterKind = FilterKind.POINT_TRACKER
    jerk_sigma: float = 1.0
    measurement_var: float = 0.25

    def __post_init__(self) -> None:
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("update_fn", _enum(UpdateFn, self.update_fn, "update_fn"))
        set_("lifecycle", _enum(LifecycleMode, self.lifecycle, "lifecycle"))
        set_("matcher", _enum(Matcher, self.matcher, "matcher"))
        set_("metric", _enum(Metric, self.metric, "metric"))
        set_("filter_kind", _enum(FilterKind, self.filter_kind, "filter_kind"))
        for key in ("score_decay", "detection_threshold", "deletion_threshold",
                    "active_threshold", "jerk_sigma", "measurement_var"):
            value = getattr(self, key)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{key}: expected a number, got {value!r}")
            if not math.isfinite(value):
                raise ConfigError(f"{key}: must be finite")
            set_(key, float(value))
        for key in ("score_decay", "detection_threshold", "deletion_threshold", "active_threshold"):
            if not 0.0 <= getattr(self, key) <= 1.0:
                raise ConfigError(f"{key}: must lie in [0, 1], got {getattr(self, key)}")
        if self.deletion_threshold > self.active_threshold:
            raise ConfigError("deletion_threshold must not exceed active_threshold")
        if self.measurement_var <= 0:
            raise ConfigError("measurement_var must be positive")
        if self.jerk_sigma < 0:
            raise ConfigError("jerk_sigma must be non-negative")
        if self.max_age is not None:
            if isinstance(self.max_age, float) and math.isinf(self.max_age):
                set_("max_age", None)
            elif isinstance(self.max_age, bool) or int(self.max_age) != self.max_age or self.max_age < 1:
                raise ConfigError(f"max_age: expected a positive integer or inf, got {self.max_age!r}")
            else:
                set_("max_age", int(self.max_age))
        if isinstance(self.min_hits, bool) or int(self.min_hits) != self.min_hits or self.min_hits < 1:
            raise ConfigError(f"min_hits: expected a positive integer, got {self.min_hits!r}")
        set_("min_hits", int(self.min_hits))
        if self.metric is Metric.MAHALANOBIS and self.filter_kind is not FilterKind.KALMAN_CVCA:
            raise ConfigError("metric 'mahalanobis' requires filter_kind 'kalman_cvca'")
        if self.gate is not None:
            if not (isinstance(self.gate, (int, float)) and self.gate > 0):
                raise ConfigError(f"gate: must be positive, got {self.gate!r}")
            set_("gate", float(self.gate))

    @property
    def effective_gate(self) -> float:
        return self.gate if self.gate is not None else _DEFAULT_GATES[self.metric]

    def replace(self, **changes: Any) -> "TrackerConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Enum):
                value = value.value
            if f.name == "max_age" and value is None:
                value = math.inf
            if f.name == "gate" and value is None:
                continue
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TrackerConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = dict(data)
        age = kwargs.get("max_age")
        if isinstance(age, str):
            if age.lower() in ("inf", "unbounded", "none"):
                kwargs["max_age"] = None
            else:
                raise ConfigError(f"max_age: cannot parse {age!r}")
        try:
            return cls(**kwargs)
        except TypeError as exc:  # pragma: no cover - guarded by the key check
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class FrameRecord:
    """One emitted track box."""

    track_id: int
    class_label: str
    center: tuple[float, float, float]
    extent: tuple[float, float, float]
    yaw: float
    score: float
    active: bool = True


@dataclass(frozen=True)
class FrameOutput:
    frame_index: int
    records: tuple[FrameRecord, ...] = field(default_factory=tuple)
    sequence: str = ""

    def __len__(self) -> int:
        return len(self.records)


def clamp01(x: float) -> float:
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return float(x)


@dataclass(frozen=True, slots=True)
class GtAnnotation:
    frame_index: int
    instance_id: int
    class_label: str
    center: tuple[float, float, float]
    extent: tuple[float, float, float] = (4.0, 2.0, 1.5)
    yaw: float = 0.0
    sequence: str = ""


@dataclass(frozen=True, slots=True)
class TrackRow:
    """One line of a track result stream."""

    frame_index: int
    track_id: int
    class_label: str
    center: tuple[float, float, float]
    extent: tuple[float, float, float]
    yaw: float
    score: float
    active: bool = True
    sequence: str = ""


def rows_from_outputs(outputs, sequence: str = "") -> list[TrackRow]:
    """Flatten per-frame tracker outputs into track rows."""
    rows = []
    for out in outputs:
        seq = sequence or out.sequence
        for r in out.records:
            rows.append(
                TrackRow(out.frame_index, r.track_id, r.class_label, r.center,
                         r.extent, r.yaw, r.score, r.active, seq)
            )
    return rows


def outputs_from_rows(rows) -> dict[str, list[FrameOutput]]:
    """Group track rows into per-sequence frame outputs (inactive rows dropped)."""
    buckets: dict[str, dict[int, list[FrameRecord]]] = {}
    for r in rows:
        frames = buckets.setdefault(r.sequence, {})
        recs = frames.setdefault(r.frame_index, [])
        if r.active:
            recs.append(FrameRecord(r.track_id, r.class_label, tuple(r.center),
                                    tuple(r.extent), r.yaw, r.score, True))
    return {
        seq: [FrameOutput(f, tuple(frames[f]), seq) for f in sorted(frames)]
        for seq, frames in sorted(buckets.items())
    }
