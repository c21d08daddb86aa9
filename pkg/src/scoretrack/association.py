"""Cost matrices and assignment between predicted tracklets and detections.

Rows are tracklets, columns are detections. Entries above the gate and pairs
with different class labels are ``+inf`` and are never matched by either
solver.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import kernels
from .domain import AssignmentResult
from .errors import SingularCovariance
from .filters import MAX_CONDITION


def euclidean_cost(t_center: Sequence[float], d_center: Sequence[float], dims: str = "2d") -> float:
    """Center distance; ``"2d"`` uses the ground plane only."""
    dx = d_center[0] - t_center[0]
    dy = d_center[1] - t_center[1]
    if dims == "2d":
        return math.sqrt(dx * dx + dy * dy)
    if dims == "3d":
        dz = d_center[2] - t_center[2]
        return math.sqrt(dx * dx + dy * dy + dz * dz)
    raise ValueError(f"dims must be '2d' or '3d', got {dims!r}")


def mahalanobis_cost(pred_xy: Sequence[float], S: np.ndarray, d_xy: Sequence[float]) -> float:
    """Squared Mahalanobis distance of a measurement from a predicted position."""
    S = np.asarray(S, dtype=np.float64)
    if not np.all(np.isfinite(S)) or np.linalg.cond(S) > MAX_CONDITION:
        raise SingularCovariance("innovation covariance is numerically singular")
    r = np.asarray(d_xy[:2], dtype=np.float64) - np.asarray(pred_xy[:2], dtype=np.float64)
    return float(r @ np.linalg.solve(S, r))


def gated_cost_matrix(
    costs: np.ndarray,
    gate: float,
    row_labels: Sequence[str] | None = None,
    col_labels: Sequence[str] | None = None,
) -> np.ndarray:
    """Return a copy of ``costs`` with gated and cross-class entries set to inf."""
    out = np.array(costs, dtype=np.float64, copy=True)
    out[out > gate] = np.inf
    if row_labels is not None and col_labels is not None and out.size:
        rl = np.asarray(row_labels, dtype=object)
        cl = np.asarray(col_labels, dtype=object)
        out[rl[:, None] != cl[None, :]] = np.inf
    return out


def _result(row_for_col: np.ndarray, costs: np.ndarray, row_ids: Sequence[int]) -> AssignmentResult:
    n = costs.shape[0]
    matches = []
    unmatched_dets = []
    used = np.zeros(n, dtype=bool)
    for j, i in enumerate(row_for_col):
        if i >= 0:
            matches.append((int(row_ids[i]), j, float(costs[i, j])))
            used[i] = True
        else:
            unmatched_dets.append(j)
    unmatched_trks = [int(row_ids[i]) for i in range(n) if not used[i]]
    return AssignmentResult(tuple(matches), tuple(unmatched_dets), tuple(unmatched_trks))


def _prepare(costs, gate, row_ids):
    costs = np.asarray(costs, dtype=np.float64)
    if costs.ndim != 2:
        raise ValueError("cost matrix must be 2-D")
    if gate is not None:
        costs = gated_cost_matrix(costs, gate)
    if row_ids is None:
        row_ids = range(costs.shape[0])
    return costs, list(row_ids)


def greedy_assign(
    costs: np.ndarray,
    detection_scores: Sequence[float],
    gate: float | None = None,
    row_ids: Sequence[int] | None = None,
) -> AssignmentResult:
    """Detections in descending score order each take their cheapest free tracklet.

    Equal scores are visited in ascending detection index.
    """
    costs, row_ids = _prepare(costs, gate, row_ids)
    scores = np.asarray(detection_scores, dtype=np.float64)
    if scores.shape[0] != costs.shape[1]:
        raise ValueError("one score per detection column required")
    order = np.argsort(-scores, kind="stable").astype(np.int64)
    row_for_col = kernels.greedy_kernel(np.ascontiguousarray(costs), order)
    return _result(row_for_col, costs, row_ids)


def hungarian_assign(
    costs: np.ndarray,
    gate: float | None = None,
    row_ids: Sequence[int] | None = None,
) -> AssignmentResult:
    """Maximum-cardinality, minimum-cost assignment over the finite entries."""
    costs, row_ids = _prepare(costs, gate, row_ids)
    n, m = costs.shape
    row_for_col = np.full(m, -1, dtype=np.int64)
    finite = np.isfinite(costs)
    if n and m and finite.any():
        # any assignment with one more admissible pair beats any with fewer
        big = 2.0 * (float(np.abs(costs[finite]).sum()) + 1.0)
        work = np.where(finite, costs, big)
        rows, cols = kernels.linear_sum_assignment(work)
        for i, j in zip(rows, cols):
            if finite[i, j]:
                row_for_col[j] = i
    return _result(row_for_col, costs, row_ids)
