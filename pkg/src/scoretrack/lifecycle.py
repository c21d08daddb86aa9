"""Tracklet birth, activation and death.

Count-based mode is the classic min-hits/max-age scheme and never looks at
scores. Confidence-based mode activates on ``score > detection_threshold``,
deactivates unmatched tracklets below ``active_threshold`` and deletes below
``deletion_threshold``. Mixed mode activates only when both rules agree and
deletes when either fires.
"""

from __future__ import annotations


from .domain import Detection, FilterKind, LifecycleMode, TrackerConfig, Tracklet
from .filters import kf_init, pt_init


def initial_state(d: Detection, cfg: TrackerConfig):
    if cfg.filter_kind is FilterKind.KALMAN_CVCA:
        return kf_init(d)
    return pt_init(d)


def _activates(score: float, hits: int, cfg: TrackerConfig) -> bool:
    if cfg.lifecycle is LifecycleMode.COUNT_BASED:
        return hits >= cfg.min_hits
    if cfg.lifecycle is LifecycleMode.CONFIDENCE_BASED:
        return score > cfg.detection_threshold
    return score > cfg.detection_threshold and hits >= cfg.min_hits


def birth(d: Detection, cfg: TrackerConfig, track_id: int, state=None) -> Tracklet:
    """New tracklet for an unmatched detection; inactive ones stay in memory."""
    return Tracklet(
        id=track_id,
        class_label=d.class_label,
        state=initial_state(d, cfg) if state is None else state,
        box_extent=(d.length, d.width, d.height),
        yaw=d.yaw,
        score=d.score,
        active=_activates(d.score, 1, cfg),
        hits=1,
        misses=0,
        age=0,
    )


def apply_match(t: Tracklet, cfg: TrackerConfig) -> None:
    """In-place :func:`on_match` for a tracklet the caller owns."""
    t.hits += 1
    t.misses = 0
    t.active = _activates(t.score, t.hits, cfg)


def apply_miss(t: Tracklet, cfg: TrackerConfig) -> bool:
    """In-place :func:`on_miss` for a tracklet the caller owns; False means delete."""
    misses = t.misses + 1
    mode = cfg.lifecycle
    too_old = cfg.max_age is not None and misses > cfg.max_age
    if mode is LifecycleMode.COUNT_BASED:
        if too_old:
            return False
        t.misses = misses
        return True
    if t.score < cfg.deletion_threshold or (mode is LifecycleMode.MIXED and too_old):
        return False
    t.misses = misses
    t.active = t.active and not t.score < cfg.active_threshold
    return True


def on_match(t: Tracklet, cfg: TrackerConfig) -> Tracklet:
    """Bookkeeping after a match; ``t.score`` must already hold the fused score."""
    new = t.copy()
    apply_match(new, cfg)
    return new


def on_miss(t: Tracklet, cfg: TrackerConfig) -> Tracklet | None:
    """Keep or delete an unmatched tracklet. Returns ``None`` when deleted.

    The score is expected to be already decayed for this frame.
    """
    new = t.copy()
    return new if apply_miss(new, cfg) else None
