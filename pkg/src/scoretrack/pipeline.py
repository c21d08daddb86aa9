"""Frame-by-frame tracking loop.

Each call to :func:`step` runs, in order: motion prediction and score decay
for every live tracklet, gated per-class association, filter update and score
fusion for matches, births for unmatched detections, the death module for
unmatched tracklets, and finally emits the active tracklets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import groupby
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .association import greedy_assign, hungarian_assign
from .domain import (
    Detection,
    FilterKind,
    FrameOutput,
    FrameRecord,
    Matcher,
    Metric,
    TrackerConfig,
    Tracklet,
    validate_detection,
)
from .errors import FrameMismatch, OutOfOrderFrame
from .filters import (
    KalmanState,
    inverse_innovation,
    kf_update,
    measurement_noise,
    process_noise,
    pt_predict,
    pt_update,
    transition_matrix,
)
from .lifecycle import apply_match, apply_miss, birth
from .scoring import decay_score, refine_on_match


@dataclass(frozen=True)
class TrackerState:
    cfg: TrackerConfig
    tracklets: tuple[Tracklet, ...] = ()
    next_id: int = 1
    last_frame: int | None = None
    # frame of the latest match per tracklet id, for point-tracker velocity
    last_match_frame: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, cfg: TrackerConfig) -> "TrackerState":
        return cls(cfg=cfg)


@lru_cache(maxsize=64)
def _kf_mats(dt: int, jerk_sigma: float):
    F = transition_matrix(dt)
    Q = process_noise(dt, jerk_sigma)
    F.flags.writeable = False
    Q.flags.writeable = False
    return F, Q


def _predict(t: Tracklet, dt: int, cfg: TrackerConfig) -> Tracklet:
    s = t.state
    if isinstance(s, KalmanState):
        F, Q = _kf_mats(dt, cfg.jerk_sigma)
        P = F @ s.covariance @ F.T + Q
        s = KalmanState(mean=F @ s.mean, covariance=0.5 * (P + P.T), z=s.z)
    else:
        s = pt_predict(s, dt)
    return Tracklet(t.id, t.class_label, s, t.box_extent, t.yaw,
                    decay_score(t.score, cfg.score_decay), t.active, t.hits, t.misses, t.age + 1)


def _position(t: Tracklet) -> tuple[float, float, float]:
    return t.state.position


def _cost_matrix(tracks: Sequence[Tracklet], dets: Sequence[Detection], cfg: TrackerConfig) -> np.ndarray:
    if cfg.metric is Metric.MAHALANOBIS:
        R = measurement_noise(cfg.measurement_var)
        pred = np.array([t.state.mean[:2] for t in tracks])
        s_inv = np.array([inverse_innovation(t.state, R) for t in tracks])
        meas = np.array([(d.cx, d.cy) for d in dets])
        costs = kernels.mahalanobis_matrix(pred, s_inv, meas)
    else:
        ndim = 3 if cfg.metric is Metric.EUCLIDEAN_3D else 2
        a = np.array([_position(t) for t in tracks])
        b = np.array([(d.cx, d.cy, d.cz) for d in dets])
        costs = kernels.euclidean_matrix(a, b, ndim)
    costs[costs > cfg.effective_gate] = np.inf
    return costs


def _associate(tracks, dets, cfg):
    """Return ``[(track_pos, det_pos)]`` pairs for one class."""
    if not tracks or not dets:
        return []
    costs = _cost_matrix(tracks, dets, cfg)
    if cfg.matcher is Matcher.HUNGARIAN:
        res = hungarian_assign(costs)
    else:
        res = greedy_assign(costs, [d.score for d in dets])
    return [(i, j) for i, j, _ in res.matches]


def _update(t: Tracklet, d: Detection, frame: int, last_match: int, cfg: TrackerConfig) -> None:
    """Filter update and score fusion, in place on a predicted copy."""
    s = t.state
    if isinstance(s, KalmanState):
        s = kf_update(s, d, measurement_noise(cfg.measurement_var))
    else:
        s = pt_update(s, d, max(1, frame - last_match))
    t.state = s
    t.box_extent = (d.length, d.width, d.height)
    t.yaw = d.yaw
    t.score = refine_on_match(t.score, d.score, cfg)


def _record(t: Tracklet) -> FrameRecord:
    return FrameRecord(
        track_id=t.id,
        class_label=t.class_label,
        center=tuple(float(v) for v in _position(t)),
        extent=t.box_extent,
        yaw=t.yaw,
        score=t.score,
        active=t.active,
    )


def step(state: TrackerState, frame_index: int, detections: Sequence[Detection]) -> tuple[TrackerState, FrameOutput]:
    """Advance the tracker by one frame."""
    cfg = state.cfg
    if state.last_frame is not None and frame_index <= state.last_frame:
        raise OutOfOrderFrame(f"frame {frame_index} after frame {state.last_frame}")
    dets = [validate_detection(d) for d in detections]
    for d in dets:
        if d.frame_index != frame_index:
            raise FrameMismatch(f"detection for frame {d.frame_index} passed to frame {frame_index}")
    dt = 1 if state.last_frame is None else frame_index - state.last_frame

    tracks = [_predict(t, dt, cfg) for t in state.tracklets]
    last_match = dict(state.last_match_frame)

    by_class_t: dict[str, list[int]] = {}
    for k, t in enumerate(tracks):
        by_class_t.setdefault(t.class_label, []).append(k)
    by_class_d: dict[str, list[int]] = {}
    for k, d in enumerate(dets):
        by_class_d.setdefault(d.class_label, []).append(k)

    matched_t: dict[int, int] = {}
    for label in sorted(by_class_t.keys() & by_class_d.keys()):
        ti = by_class_t[label]
        di = by_class_d[label]
        for a, b in _associate([tracks[k] for k in ti], [dets[k] for k in di], cfg):
            matched_t[ti[a]] = di[b]
    matched_d = set(matched_t.values())

    survivors: list[Tracklet] = []
    for k, t in enumerate(tracks):
        if k in matched_t:
            d = dets[matched_t[k]]
            _update(t, d, frame_index, last_match.get(t.id, frame_index - 1), cfg)
            apply_match(t, cfg)
            last_match[t.id] = frame_index
            survivors.append(t)
        elif apply_miss(t, cfg):
            survivors.append(t)
        else:
            last_match.pop(t.id, None)

    next_id = state.next_id
    for j, d in enumerate(dets):
        if j in matched_d:
            continue
        survivors.append(birth(d, cfg, next_id))
        last_match[next_id] = frame_index
        next_id += 1

    survivors.sort(key=lambda t: t.id)
    out = FrameOutput(frame_index, tuple(_record(t) for t in survivors if t.active))
    new_state = TrackerState(
        cfg=cfg,
        tracklets=tuple(survivors),
        next_id=next_id,
        last_frame=frame_index,
        last_match_frame=last_match,
    )
    return new_state, out


def group_frames(
    detections: Iterable[Detection], frame_indices: Iterable[int] | None = None
) -> list[tuple[int, list[Detection]]]:
    """Bucket detections by frame; ``frame_indices`` adds empty frames."""
    dets = sorted(detections, key=lambda d: d.frame_index)
    buckets = {f: list(g) for f, g in groupby(dets, key=lambda d: d.frame_index)}
    frames = set(buckets)
    if frame_indices is not None:
        frames |= set(frame_indices)
    return [(f, buckets.get(f, [])) for f in sorted(frames)]


def run_sequence(
    cfg: TrackerConfig, frames: Iterable[tuple[int, Sequence[Detection]]]
) -> list[FrameOutput]:
    """Fold :func:`step` over ``(frame_index, detections)`` pairs."""
    state = TrackerState.empty(cfg)
    outputs = []
    for frame_index, dets in frames:
        state, out = step(state, frame_index, dets)
        outputs.append(out)
    return outputs
