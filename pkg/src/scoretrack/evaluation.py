"""CLEAR-style association and the MOTA / MOTAR / AMOTA metric suite.

Association is per class and per frame on 2D center distance. Pairs matched
in the previous frame are kept while still within ``dist_th``; remaining
candidates are matched greedily by ascending distance. A ground-truth object
matched to a different track id than at its last match counts one id switch.

Operating points are score thresholds: a threshold keeps every prediction
with ``score >= threshold``. Sweeps evaluate every distinct prediction score.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .domain import GtAnnotation, TrackRow
from .errors import RecallOutOfRange, ZeroGroundTruth

DEFAULT_DIST_TH = 2.0
DEFAULT_RECALL_POINTS = 40


class MotarConvention(str, Enum):
    DEVKIT = "devkit"  # subtract (1 - r) * GT
    PAPER = "paper"  # add (1 - r) * GT instead


# ---------------------------------------------------------------------------
# scalar metrics
# ---------------------------------------------------------------------------


def mota(fp: int, fn: int, ids: int, gt: int) -> float:
    if gt <= 0:
        raise ZeroGroundTruth("MOTA undefined without ground truth")
    return 1.0 - (fp + fn + ids) / gt


def motar(
    ids_r: int,
    fp_r: int,
    fn_r: int,
    gt: int,
    r: float,
    convention: MotarConvention | str = MotarConvention.DEVKIT,
) -> float:
    """Recall-normalized MOTA, clipped to [0, 1]."""
    if gt <= 0:
        raise ZeroGroundTruth("MOTAR undefined without ground truth")
    if not 0.0 < r <= 1.0:
        raise RecallOutOfRange(f"recall {r} outside (0, 1]")
    sign = -1.0 if MotarConvention(convention) is MotarConvention.DEVKIT else 1.0
    value = 1.0 - (ids_r + fp_r + fn_r + sign * (1.0 - r) * gt) / (r * gt)
    return min(1.0, max(0.0, value))


def amota(sweep: Sequence["SweepPoint"]) -> float:
    """Mean MOTAR over the recall grid."""
    if not sweep:
        return 0.0
    return float(sum(p.motar for p in sweep) / len(sweep))


# ---------------------------------------------------------------------------
# association
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrameMatches:
    sequence: str
    frame_index: int
    class_label: str
    matches: tuple[tuple[int, int], ...]  # (instance_id, track_id)
    fp: int
    fn: int
    ids: int


def _key(seq: str, frame: int) -> tuple[str, int]:
    return (seq, frame)


def associate_frames(
    gt: Iterable[GtAnnotation],
    predictions: Iterable[TrackRow],
    dist_th: float = DEFAULT_DIST_TH,
    threshold: float = -math.inf,
) -> list[FrameMatches]:
    """Per-frame, per-class CLEAR matching (reference implementation)."""
    gt_by: dict = {}
    pr_by: dict = {}
    for g in gt:
        gt_by.setdefault((g.class_label, _key(g.sequence, g.frame_index)), []).append(g)
    for p in predictions:
        if p.score >= threshold:
            pr_by.setdefault((p.class_label, _key(p.sequence, p.frame_index)), []).append(p)
    classes = sorted({c for c, _ in gt_by} | {c for c, _ in pr_by})
    out: list[FrameMatches] = []
    for cls in classes:
        keys = sorted({k for c, k in gt_by if c == cls} | {k for c, k in pr_by if c == cls})
        last_match: dict = {}
        last_pair: dict = {}  # gt key -> (track id, frame key of that pair)
        for key in keys:
            gts = gt_by.get((cls, key), [])
            prs = pr_by.get((cls, key), [])
            pairs: dict[int, int] = {}  # gt position -> pred position
            taken: set[int] = set()
            prev_key = (key[0], key[1] - 1)
            for a, g in enumerate(gts):
                held = last_pair.get((g.sequence, g.instance_id))
                if held is None or held[1] != prev_key:
                    continue
                k = held[0]
                for q, p in enumerate(prs):
                    if p.track_id == k:
                        if q not in taken and _dist(g, p) <= dist_th:
                            pairs[a] = q
                            taken.add(q)
                        break
            cand = []
            for a, g in enumerate(gts):
                if a in pairs:
                    continue
                for q, p in enumerate(prs):
                    if q in taken:
                        continue
                    d = _dist(g, p)
                    if d <= dist_th:
                        cand.append((d, a, q))
            cand.sort(key=lambda c: c[0])  # stable: ties keep (gt, pred) order
            for d, a, q in cand:
                if a in pairs or q in taken:
                    continue
                pairs[a] = q
                taken.add(q)
            ids = 0
            matches = []
            for a in sorted(pairs):
                g = gts[a]
                tid = prs[pairs[a]].track_id
                gk = (g.sequence, g.instance_id)
                if gk in last_match and last_match[gk] != tid:
                    ids += 1
                last_match[gk] = tid
                last_pair[gk] = (tid, key)
                matches.append((g.instance_id, tid))
            out.append(
                FrameMatches(key[0], key[1], cls, tuple(matches),
                             fp=len(prs) - len(pairs), fn=len(gts) - len(pairs), ids=ids)
            )
    return out


def _dist(g: GtAnnotation, p: TrackRow) -> float:
    dx = g.center[0] - p.center[0]
    dy = g.center[1] - p.center[1]
    return math.sqrt(dx * dx + dy * dy)


# ---------------------------------------------------------------------------
# vectorized per-class streams
# ---------------------------------------------------------------------------


@dataclass
class ClassStream:
    """Frame-aligned arrays for one class, ready for the counting kernels."""

    frame_code: np.ndarray
    gt_start: np.ndarray
    gt_stop: np.ndarray
    gt_id: np.ndarray
    gt_xy: np.ndarray
    pr_start: np.ndarray
    pr_stop: np.ndarray
    pr_id: np.ndarray
    pr_xy: np.ndarray
    pr_score: np.ndarray
    n_gt_ids: int
    n_pr_ids: int
    n_gt: int

    def counts(self, thresholds: np.ndarray, dist_th: float) -> np.ndarray:
        """(T, 4) array of TP, FP, FN, IDS per threshold."""
        return kernels.clear_sweep(
            self.frame_code, self.gt_start, self.gt_stop, self.gt_id, self.gt_xy,
            self.pr_start, self.pr_stop, self.pr_id, self.pr_xy, self.pr_score,
            self.n_gt_ids, self.n_pr_ids,
            np.ascontiguousarray(thresholds, dtype=np.float64), float(dist_th),
        )

    def thresholds(self) -> np.ndarray:
        """Distinct prediction scores, highest first."""
        return np.unique(self.pr_score)[::-1].copy()


def build_stream(gt: Sequence[GtAnnotation], preds: Sequence[TrackRow]) -> ClassStream:
    keys = sorted({_key(g.sequence, g.frame_index) for g in gt}
                  | {_key(p.sequence, p.frame_index) for p in preds})
    kidx = {k: i for i, k in enumerate(keys)}
    nk = len(keys)

    gt_sorted = sorted(gt, key=lambda g: kidx[_key(g.sequence, g.frame_index)])
    pr_sorted = sorted(preds, key=lambda p: kidx[_key(p.sequence, p.frame_index)])

    gid_map: dict = {}
    gt_id = np.array([gid_map.setdefault((g.sequence, g.instance_id), len(gid_map)) for g in gt_sorted],
                     dtype=np.int64)
    pid_map: dict = {}
    pr_id = np.array([pid_map.setdefault((p.sequence, p.track_id), len(pid_map)) for p in pr_sorted],
                     dtype=np.int64)
    gt_k = np.array([kidx[_key(g.sequence, g.frame_index)] for g in gt_sorted], dtype=np.int64)
    pr_k = np.array([kidx[_key(p.sequence, p.frame_index)] for p in pr_sorted], dtype=np.int64)
    slots = np.arange(nk)
    seq_index = {s: i for i, s in enumerate(sorted({k[0] for k in keys}))}
    frame_code = np.array([seq_index[s] * (1 << 40) + f for s, f in keys], dtype=np.int64)
    return ClassStream(
        frame_code=frame_code,
        gt_start=np.searchsorted(gt_k, slots, "left").astype(np.int64),
        gt_stop=np.searchsorted(gt_k, slots, "right").astype(np.int64),
        gt_id=gt_id,
        gt_xy=np.array([g.center[:2] for g in gt_sorted], dtype=np.float64).reshape(-1, 2),
        pr_start=np.searchsorted(pr_k, slots, "left").astype(np.int64),
        pr_stop=np.searchsorted(pr_k, slots, "right").astype(np.int64),
        pr_id=pr_id,
        pr_xy=np.array([p.center[:2] for p in pr_sorted], dtype=np.float64).reshape(-1, 2),
        pr_score=np.array([p.score for p in pr_sorted], dtype=np.float64),
        n_gt_ids=len(gid_map),
        n_pr_ids=len(pid_map),
        n_gt=len(gt_sorted),
    )


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    recall: float  # target recall on the grid
    threshold: float | None  # None when the target recall is unreachable
    motar: float
    tp: int = 0
    fp: int = 0
    fn: int = 0
    ids: int = 0


def _single_class(gt, preds):
    labels = {g.class_label for g in gt} | {p.class_label for p in preds}
    if len(labels) > 1:
        raise ValueError(f"expected a single class, got {sorted(labels)}")


def sweep_from_counts(
    thresholds: np.ndarray,
    counts: np.ndarray,
    n_gt: int,
    n: int = DEFAULT_RECALL_POINTS,
    convention: MotarConvention | str = MotarConvention.DEVKIT,
) -> list[SweepPoint]:
    if n < 2:
        raise ValueError("need at least two recall points")
    if n_gt <= 0:
        raise ZeroGroundTruth("recall sweep undefined without ground truth")
    steps = n - 1
    out = []
    tp = counts[:, 0] if len(counts) else np.empty(0, dtype=np.int64)
    for k in range(1, n):
        # highest threshold reaching recall k/steps, compared exactly in integers
        hit = np.flatnonzero(tp * steps >= k * n_gt)
        r = k / steps
        if hit.size == 0:
            out.append(SweepPoint(r, None, 0.0))
            continue
        t = int(hit[0])
        c_tp, c_fp, c_fn, c_ids = (int(v) for v in counts[t])
        value = motar(c_ids, c_fp, c_fn, n_gt, c_tp / n_gt, convention)
        out.append(SweepPoint(r, float(thresholds[t]), value, c_tp, c_fp, c_fn, c_ids))
    return out


def recall_sweep(
    gt: Sequence[GtAnnotation],
    predictions: Sequence[TrackRow],
    n: int = DEFAULT_RECALL_POINTS,
    dist_th: float = DEFAULT_DIST_TH,
    convention: MotarConvention | str = MotarConvention.DEVKIT,
) -> list[SweepPoint]:
    """MOTAR at each recall ``1/(n-1), ..., 1`` for a single-class stream.

    Each point uses the highest score threshold whose filtered predictions
    reach the target recall. MOTAR is evaluated at the recall actually
    achieved there; unreachable points score 0.
    """
    gt = list(gt)
    predictions = list(predictions)
    _single_class(gt, predictions)
    stream = build_stream(gt, predictions)
    thresholds = stream.thresholds()
    counts = stream.counts(thresholds, dist_th)
    return sweep_from_counts(thresholds, counts, stream.n_gt, n, convention)


def best_from_counts(thresholds: np.ndarray, counts: np.ndarray, n_gt: int):
    """``(threshold, mota, row)`` maximizing MOTA; first (highest) threshold wins ties."""
    if len(thresholds) == 0:
        return None, mota(0, n_gt, 0, n_gt), np.array([0, 0, n_gt, 0])
    values = 1.0 - (counts[:, 1] + counts[:, 2] + counts[:, 3]) / n_gt
    t = int(np.argmax(values))
    return float(thresholds[t]), float(values[t]), counts[t]


def best_mota(
    gt: Sequence[GtAnnotation],
    predictions: Sequence[TrackRow],
    dist_th: float = DEFAULT_DIST_TH,
) -> tuple[float | None, float]:
    """Best MOTA over score thresholds per class, gt-weighted across classes.

    The returned threshold is the per-class optimum for single-class input
    and ``None`` otherwise.
    """
    gt = list(gt)
    predictions = list(predictions)
    classes = sorted({g.class_label for g in gt})
    if not classes:
        raise ZeroGroundTruth("no ground truth")
    total_gt = 0
    acc = 0.0
    best_t = None
    for cls in classes:
        g = [x for x in gt if x.class_label == cls]
        p = [x for x in predictions if x.class_label == cls]
        stream = build_stream(g, p)
        thresholds = stream.thresholds()
        t, value, _ = best_from_counts(thresholds, stream.counts(thresholds, dist_th), stream.n_gt)
        acc += value * stream.n_gt
        total_gt += stream.n_gt
        best_t = t
    return (best_t if len(classes) == 1 else None), acc / total_gt


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class ClassMetrics:
    class_label: str
    gt: int
    amota: float
    mota: float
    mota_threshold: float | None
    fp: int
    fn: int
    ids: int
    tp: int
    sweep: list[SweepPoint] = field(default_factory=list)


@dataclass
class MetricsReport:
    classes: dict[str, ClassMetrics]
    amota: float
    mota: float
    fp: int
    fn: int
    ids: int
    gt: int
    dist_th: float
    recall_points: int
    convention: str

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    def table(self) -> str:
        """Plain-text summary, one row per class plus the mean."""
        head = f"{'class':<14}{'AMOTA':>8}{'MOTA':>8}{'FP':>8}{'FN':>8}{'IDS':>6}{'GT':>8}"
        lines = [head, "-" * len(head)]
        for name in sorted(self.classes):
            c = self.classes[name]
            lines.append(f"{name:<14}{c.amota:>8.4f}{c.mota:>8.4f}{c.fp:>8d}{c.fn:>8d}{c.ids:>6d}{c.gt:>8d}")
        lines.append("-" * len(head))
        lines.append(
            f"{'mean':<14}{self.amota:>8.4f}{self.mota:>8.4f}{self.fp:>8d}{self.fn:>8d}{self.ids:>6d}{self.gt:>8d}"
        )
        return "\n".join(lines)

    def curve_rows(self) -> list[dict]:
        rows = []
        for name in sorted(self.classes):
            for p in self.classes[name].sweep:
                rows.append({
                    "class": name, "recall": p.recall, "threshold": p.threshold,
                    "motar": p.motar, "tp": p.tp, "fp": p.fp, "fn": p.fn, "ids": p.ids,
                })
        return rows


def evaluate(
    gt: Iterable[GtAnnotation],
    predictions: Iterable[TrackRow],
    dist_th: float = DEFAULT_DIST_TH,
    n: int = DEFAULT_RECALL_POINTS,
    convention: MotarConvention | str = MotarConvention.DEVKIT,
) -> MetricsReport:
    """Full report over every class present in the ground truth.

    AMOTA is the unweighted class mean; MOTA is the gt-weighted mean of the
    per-class best MOTA. FP/FN/IDS are taken at each class's best-MOTA
    threshold.
    """
    gt = list(gt)
    predictions = list(predictions)
    convention = MotarConvention(convention)
    if not gt:
        raise ZeroGroundTruth("no ground truth annotations")
    by_gt: dict[str, list] = {}
    for g in gt:
        by_gt.setdefault(g.class_label, []).append(g)
    by_pr: dict[str, list] = {}
    for p in predictions:
        by_pr.setdefault(p.class_label, []).append(p)
    classes: dict[str, ClassMetrics] = {}
    for cls in sorted(by_gt):
        stream = build_stream(by_gt[cls], by_pr.get(cls, []))
        thresholds = stream.thresholds()
        counts = stream.counts(thresholds, dist_th)
        sweep = sweep_from_counts(thresholds, counts, stream.n_gt, n, convention)
        t, best, row = best_from_counts(thresholds, counts, stream.n_gt)
        classes[cls] = ClassMetrics(
            class_label=cls, gt=stream.n_gt, amota=amota(sweep), mota=best, mota_threshold=t,
            tp=int(row[0]), fp=int(row[1]), fn=int(row[2]), ids=int(row[3]), sweep=sweep,
        )
    total_gt = sum(c.gt for c in classes.values())
    return MetricsReport(
        classes=classes,
        amota=float(np.mean([c.amota for c in classes.values()])),
        mota=float(sum(c.mota * c.gt for c in classes.values()) / total_gt),
        fp=sum(c.fp for c in classes.values()),
        fn=sum(c.fn for c in classes.values()),
        ids=sum(c.ids for c in classes.values()),
        gt=total_gt,
        dist_th=float(dist_th),
        recall_points=int(n),
        convention=convention.value,
    )
