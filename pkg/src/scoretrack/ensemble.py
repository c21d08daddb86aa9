"""Late fusion of two per-frame track streams.

Tracks from stream A and stream B are paired per class by greedy 2D center
distance inside ``cross_gate``. Voting strategies keep the union
(affirmative) or only the agreed pairs (unanimous, equal to consensus with two
voters). The confidence strategy merges pair scores with a score-update
function and decays scores according to a per-stream policy:

``decay_a`` / ``decay_b``
    tracks of that stream without a partner in the other stream lose
    ``sigma``;
``decay_both`` / ``decay_both_if_unmatched``
    unpartnered tracks of both streams lose ``sigma``.

Matched pairs are never decayed.

The fuser hands out its own output ids and keeps a pair's id stable while the
same two source tracks keep matching.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .domain import AssignmentResult, FrameOutput, FrameRecord, UpdateFn, _enum, clamp01
from .errors import ConfigError, FrameMismatch
from .scoring import decay_score, update_function

DEFAULT_CROSS_GATE = 2.0


class Strategy(str, Enum):
    AFFIRMATIVE = "affirmative"
    UNANIMOUS = "unanimous"
    CONFIDENCE = "confidence"


class DecayPolicy(str, Enum):
    DECAY_A = "decay_a"
    DECAY_B = "decay_b"
    DECAY_BOTH = "decay_both"
    DECAY_BOTH_IF_UNMATCHED = "decay_both_if_unmatched"

    def mirrored(self) -> "DecayPolicy":
        return {DecayPolicy.DECAY_A: DecayPolicy.DECAY_B,
                DecayPolicy.DECAY_B: DecayPolicy.DECAY_A}.get(self, self)


@dataclass(frozen=True)
class EnsembleConfig:
    strategy: Strategy = Strategy.CONFIDENCE
    decay_policy: DecayPolicy = DecayPolicy.DECAY_BOTH_IF_UNMATCHED
    sigma: float = 0.2
    cross_gate: float = DEFAULT_CROSS_GATE
    update_fn: UpdateFn = UpdateFn.COMPLEMENT_MULT

    def __post_init__(self) -> None:
        object.__setattr__(self, "strategy", _enum(Strategy, self.strategy, "strategy"))
        object.__setattr__(self, "decay_policy", _enum(DecayPolicy, self.decay_policy, "decay_policy"))
        object.__setattr__(self, "update_fn", _enum(UpdateFn, self.update_fn, "update_fn"))
        for key in ("sigma", "cross_gate"):
            v = getattr(self, key)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"{key}: expected a finite number, got {v!r}")
            object.__setattr__(self, key, float(v))
        if not 0.0 <= self.sigma <= 1.0:
            raise ConfigError("sigma must lie in [0, 1]")
        if self.cross_gate <= 0:
            raise ConfigError("cross_gate must be positive")

    def to_dict(self) -> dict:
        return {k: (v.value if isinstance(v, Enum) else v) for k, v in dataclasses.asdict(self).items()}

    @classmethod
    def from_dict(cls, data: Mapping) -> "EnsembleConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown ensemble keys: {', '.join(unknown)}")
        return cls(**data)


# ---------------------------------------------------------------------------
# matching
# ---------------------------------------------------------------------------


def _dist2d(a: FrameRecord, b: FrameRecord) -> float:
    return math.hypot(a.center[0] - b.center[0], a.center[1] - b.center[1])


def cross_match(
    frame_a: FrameOutput,
    frame_b: FrameOutput,
    cross_gate: float = DEFAULT_CROSS_GATE,
    previous_pairs: Iterable[tuple[int, int]] = (),
) -> AssignmentResult:
    """Pair records of two frames.

    Matches are ``(index_in_a, index_in_b, distance)``; unmatched detections
    are B indices and unmatched tracklets A indices. Pairs of source ids seen
    in ``previous_pairs`` are kept first when still inside the gate; the rest
    are matched by ascending distance, higher combined score first on ties.
    """
    if frame_a.frame_index != frame_b.frame_index:
        raise FrameMismatch(f"frame {frame_a.frame_index} vs frame {frame_b.frame_index}")
    ra, rb = frame_a.records, frame_b.records
    prev = set(previous_pairs)
    used_a: set[int] = set()
    used_b: set[int] = set()
    matches = []
    cand = []
    for i, a in enumerate(ra):
        for j, b in enumerate(rb):
            if a.class_label != b.class_label:
                continue
            d = _dist2d(a, b)
            if d > cross_gate:
                continue
            if (a.track_id, b.track_id) in prev:
                cand.append((0, d, -(a.score + b.score), i, j))
            else:
                cand.append((1, d, -(a.score + b.score), i, j))
    for _, d, _, i, j in sorted(cand):
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        matches.append((i, j, d))
    matches.sort()
    return AssignmentResult(
        tuple(matches),
        tuple(j for j in range(len(rb)) if j not in used_b),
        tuple(i for i in range(len(ra)) if i not in used_a),
    )


# ---------------------------------------------------------------------------
# output ids
# ---------------------------------------------------------------------------


class MergedIds:
    """Output-id bookkeeping across frames for one fused sequence."""

    def __init__(self) -> None:
        self.next_id = 1
        self.of_a: dict[int, int] = {}
        self.of_b: dict[int, int] = {}

    def _new(self) -> int:
        out = self.next_id
        self.next_id += 1
        return out

    def assign(self, items: Sequence[tuple[int | None, int | None, float]]) -> list[int]:
        """Ids for ``(id_a, id_b, score)`` items of one frame, pairs first.

        A pair reuses an existing merged id of either member (the smaller when
        both have one). Strays are served in descending score so that after a
        divorce the stronger member keeps the shared id.
        """
        used: set[int] = set()
        out: list[int | None] = [None] * len(items)
        pairs = [k for k, (a, b, _) in enumerate(items) if a is not None and b is not None]
        strays = [k for k, (a, b, _) in enumerate(items) if a is None or b is None]
        for k in pairs:
            a, b, _ = items[k]
            known = [m for m in (self.of_a.get(a), self.of_b.get(b)) if m is not None and m not in used]
            mid = min(known) if known else self._new()
            self.of_a[a] = mid
            self.of_b[b] = mid
            used.add(mid)
            out[k] = mid
        strays.sort(key=lambda k: (-items[k][2], items[k][0] is None, k))
        for k in strays:
            a, b, _ = items[k]
            table, key = (self.of_a, a) if a is not None else (self.of_b, b)
            mid = table.get(key)
            if mid is None or mid in used:
                mid = self._new()
            table[key] = mid
            used.add(mid)
            out[k] = mid
        return out  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------


def _geometry(a: FrameRecord, b: FrameRecord) -> FrameRecord:
    return a if a.score >= b.score else b


def _emit(frame_index, sequence, items, ids: MergedIds | None) -> FrameOutput:
    """``items`` are (id_a, id_b, record, score); drops non-positive scores."""
    items = [it for it in items if it[3] > 0.0]
    ids = ids if ids is not None else MergedIds()
    new_ids = ids.assign([(a, b, s) for a, b, _, s in items])
    recs = [
        dataclasses.replace(rec, track_id=mid, score=clamp01(s), active=True)
        for (_, _, rec, s), mid in zip(items, new_ids)
    ]
    recs.sort(key=lambda r: r.track_id)
    return FrameOutput(frame_index, tuple(recs), sequence)


def _pairs(frame_a, frame_b, matches: AssignmentResult):
    ra, rb = frame_a.records, frame_b.records
    return [(ra[i], rb[j]) for i, j, _ in matches.matches]


def _strays(frame_a, frame_b, matches: AssignmentResult):
    ra, rb = frame_a.records, frame_b.records
    return ([ra[i] for i in matches.unmatched_tracklets],
            [rb[j] for j in matches.unmatched_detections])


def fuse_affirmative(frame_a, frame_b, matches: AssignmentResult, ids: MergedIds | None = None) -> FrameOutput:
    """Union of both streams; a matched pair is emitted once with the max score."""
    items = [(a.track_id, b.track_id, _geometry(a, b), max(a.score, b.score))
             for a, b in _pairs(frame_a, frame_b, matches)]
    sa, sb = _strays(frame_a, frame_b, matches)
    items += [(a.track_id, None, a, a.score) for a in sa]
    items += [(None, b.track_id, b, b.score) for b in sb]
    return _emit(frame_a.frame_index, frame_a.sequence, items, ids)


def fuse_unanimous(frame_a, frame_b, matches: AssignmentResult, ids: MergedIds | None = None) -> FrameOutput:
    """Only tracks confirmed by both streams."""
    items = [(a.track_id, b.track_id, _geometry(a, b), max(a.score, b.score))
             for a, b in _pairs(frame_a, frame_b, matches)]
    return _emit(frame_a.frame_index, frame_a.sequence, items, ids)


def _decays(policy: DecayPolicy) -> tuple[bool, bool]:
    """Whether strays of stream A and of stream B lose ``sigma``."""
    return (policy is not DecayPolicy.DECAY_B, policy is not DecayPolicy.DECAY_A)


def fuse_confidence(
    frame_a, frame_b, matches: AssignmentResult, cfg: EnsembleConfig, ids: MergedIds | None = None
) -> FrameOutput:
    """Merge pair scores with the update function; strays decay per ``cfg.decay_policy``.

    Matched pairs are never decayed, so ``decay_both`` and
    ``decay_both_if_unmatched`` coincide.
    """
    fuse = update_function(cfg.update_fn)
    decay_a, decay_b = _decays(cfg.decay_policy)
    items = [(a.track_id, b.track_id, _geometry(a, b), clamp01(fuse(a.score, b.score)))
             for a, b in _pairs(frame_a, frame_b, matches)]
    sa, sb = _strays(frame_a, frame_b, matches)
    items += [(a.track_id, None, a, decay_score(a.score, cfg.sigma) if decay_a else a.score) for a in sa]
    items += [(None, b.track_id, b, decay_score(b.score, cfg.sigma) if decay_b else b.score) for b in sb]
    return _emit(frame_a.frame_index, frame_a.sequence, items, ids)


class EnsembleFusion:
    """Stateful fuser for one sequence: remembers pairs and output ids."""

    def __init__(self, cfg: EnsembleConfig) -> None:
        self.cfg = cfg
        self.ids = MergedIds()
        self.pairs: set[tuple[int, int]] = set()

    def fuse(self, frame_a: FrameOutput, frame_b: FrameOutput) -> FrameOutput:
        m = cross_match(frame_a, frame_b, self.cfg.cross_gate, self.pairs)
        ra, rb = frame_a.records, frame_b.records
        self.pairs = {(ra[i].track_id, rb[j].track_id) for i, j, _ in m.matches}
        if self.cfg.strategy is Strategy.AFFIRMATIVE:
            return fuse_affirmative(frame_a, frame_b, m, self.ids)
        if self.cfg.strategy is Strategy.UNANIMOUS:
            return fuse_unanimous(frame_a, frame_b, m, self.ids)
        return fuse_confidence(frame_a, frame_b, m, self.cfg, self.ids)


def fuse_streams(
    cfg: EnsembleConfig, frames_a: Sequence[FrameOutput], frames_b: Sequence[FrameOutput]
) -> list[FrameOutput]:
    """Fuse two single-sequence streams frame by frame; missing frames count as empty."""
    by_a = {f.frame_index: f for f in frames_a}
    by_b = {f.frame_index: f for f in frames_b}
    seq = next((f.sequence for f in list(frames_a) + list(frames_b)), "")
    fuser = EnsembleFusion(cfg)
    out = []
    for idx in sorted(by_a.keys() | by_b.keys()):
        fa = by_a.get(idx, FrameOutput(idx, (), seq))
        fb = by_b.get(idx, FrameOutput(idx, (), seq))
        out.append(fuser.fuse(fa, fb))
    return out
