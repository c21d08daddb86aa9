"""Hot numeric kernels: pairwise costs, assignment solvers, CLEAR counting.

Every kernel here is compiled through :func:`scoretrack._accel.jit`, so the
numba and pure-Python paths share one source. Where a vectorized numpy form is
the natural fallback (the cost matrices) both variants are kept and the public
wrapper picks one according to the backend flag.
"""

from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, jit

INF = np.inf


# ---------------------------------------------------------------------------
# pairwise costs
# ---------------------------------------------------------------------------


@jit
def _euclidean_loop(a, b, ndim):
    n = a.shape[0]
    m = b.shape[0]
    out = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for k in range(ndim):
                d = a[i, k] - b[j, k]
                acc += d * d
            out[i, j] = np.sqrt(acc)
    return out


def _euclidean_np(a, b, ndim):
    diff = a[:, None, :ndim] - b[None, :, :ndim]
    sq = diff[..., 0] * diff[..., 0]
    for k in range(1, ndim):
        sq = sq + diff[..., k] * diff[..., k]
    return np.sqrt(sq)


def euclidean_matrix(a: np.ndarray, b: np.ndarray, ndim: int) -> np.ndarray:
    """Center distances between rows of ``a`` (n,>=ndim) and ``b`` (m,>=ndim)."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.empty((a.shape[0], b.shape[0]))
    if USE_NUMBA:
        return _euclidean_loop(a, b, ndim)
    return _euclidean_np(a, b, ndim)


@jit
def _mahalanobis_loop(pred, s_inv, meas):
    n = pred.shape[0]
    m = meas.shape[0]
    out = np.empty((n, m))
    for i in range(n):
        a = s_inv[i, 0, 0]
        b = s_inv[i, 0, 1]
        c = s_inv[i, 1, 0]
        d = s_inv[i, 1, 1]
        for j in range(m):
            r0 = meas[j, 0] - pred[i, 0]
            r1 = meas[j, 1] - pred[i, 1]
            out[i, j] = r0 * (a * r0 + b * r1) + r1 * (c * r0 + d * r1)
    return out


def _mahalanobis_np(pred, s_inv, meas):
    r = meas[None, :, :2] - pred[:, None, :2]
    r0 = r[..., 0]
    r1 = r[..., 1]
    a = s_inv[:, 0, 0][:, None]
    b = s_inv[:, 0, 1][:, None]
    c = s_inv[:, 1, 0][:, None]
    d = s_inv[:, 1, 1][:, None]
    return r0 * (a * r0 + b * r1) + r1 * (c * r0 + d * r1)


def mahalanobis_matrix(pred: np.ndarray, s_inv: np.ndarray, meas: np.ndarray) -> np.ndarray:
    """Squared Mahalanobis distances given per-row inverse innovation covariances."""
    pred = np.ascontiguousarray(pred, dtype=np.float64)
    s_inv = np.ascontiguousarray(s_inv, dtype=np.float64)
    meas = np.ascontiguousarray(meas, dtype=np.float64)
    if pred.shape[0] == 0 or meas.shape[0] == 0:
        return np.empty((pred.shape[0], meas.shape[0]))
    if USE_NUMBA:
        return _mahalanobis_loop(pred, s_inv, meas)
    return _mahalanobis_np(pred, s_inv, meas)


# ---------------------------------------------------------------------------
# assignment
# ---------------------------------------------------------------------------


@jit
def greedy_kernel(cost, det_order):
    """Column-driven greedy matching.

    Columns (detections) are visited in ``det_order``; each takes the cheapest
    still-free row with a finite cost, lower row index on ties. Returns the
    row index per column, ``-1`` when unmatched.
    """
    n = cost.shape[0]
    m = cost.shape[1]
    row_taken = np.zeros(n, dtype=np.bool_)
    row_for_col = np.full(m, -1, dtype=np.int64)
    for k in range(det_order.shape[0]):
        j = det_order[k]
        best = -1
        best_cost = INF
        for i in range(n):
            if row_taken[i]:
                continue
            c = cost[i, j]
            if c < best_cost:
                best_cost = c
                best = i
        if best >= 0:
            row_taken[best] = True
            row_for_col[j] = best
    return row_for_col


@jit
def _lsa_wide(cost):
    # shortest augmenting path (Jonker-Volgenant style); requires nr <= nc
    nr = cost.shape[0]
    nc = cost.shape[1]
    u = np.zeros(nr)
    v = np.zeros(nc)
    spc = np.empty(nc)
    path = np.full(nc, -1, dtype=np.int64)
    col4row = np.full(nr, -1, dtype=np.int64)
    row4col = np.full(nc, -1, dtype=np.int64)
    sr = np.zeros(nr, dtype=np.bool_)
    sc = np.zeros(nc, dtype=np.bool_)
    remaining = np.empty(nc, dtype=np.int64)

    for cur in range(nr):
        min_val = 0.0
        num_remaining = nc
        for it in range(nc):
            remaining[it] = nc - it - 1
        sr[:] = False
        sc[:] = False
        spc[:] = INF
        sink = -1
        i = cur
        while sink == -1:
            index = -1
            lowest = INF
            sr[i] = True
            for it in range(num_remaining):
                j = remaining[it]
                r = min_val + cost[i, j] - u[i] - v[j]
                if r < spc[j]:
                    path[j] = i
                    spc[j] = r
                if spc[j] < lowest or (spc[j] == lowest and row4col[j] == -1):
                    lowest = spc[j]
                    index = it
            min_val = lowest
            if index == -1 or min_val == INF:
                return col4row, False
            j = remaining[index]
            if row4col[j] == -1:
                sink = j
            else:
                i = row4col[j]
            sc[j] = True
            num_remaining -= 1
            remaining[index] = remaining[num_remaining]

        u[cur] += min_val
        for r_ in range(nr):
            if sr[r_] and r_ != cur:
                u[r_] += min_val - spc[col4row[r_]]
        for c_ in range(nc):
            if sc[c_]:
                v[c_] -= min_val - spc[c_]

        j = sink
        while True:
            i = path[j]
            row4col[j] = i
            tmp = col4row[i]
            col4row[i] = j
            j = tmp
            if i == cur:
                break
    return col4row, True


def linear_sum_assignment(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-cost assignment on a dense finite matrix of any shape.

    Returns ``(rows, cols)`` index arrays of length ``min(n, m)`` sorted by row.
    """
    cost = np.asarray(cost, dtype=np.float64)
    n, m = cost.shape
    if n == 0 or m == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    transposed = n > m
    work = np.ascontiguousarray(cost.T if transposed else cost)
    col4row, ok = _lsa_wide(work)
    if not ok:  # pragma: no cover - unreachable for finite input
        raise RuntimeError("assignment infeasible")
    rows = np.arange(work.shape[0], dtype=np.int64)
    if transposed:
        order = np.argsort(col4row, kind="stable")
        return col4row[order], rows[order]
    return rows, col4row


# ---------------------------------------------------------------------------
# CLEAR-style association counting
# ---------------------------------------------------------------------------


@jit
def clear_counts(
    frame_code, gt_start, gt_stop, gt_id, gt_xy,
    pr_start, pr_stop, pr_id, pr_xy, pr_score,
    n_gt_ids, n_pr_ids, threshold, dist_th,
):
    """Count TP, FP, FN and id switches for one class stream at one threshold.

    Frames are given as aligned ``[start, stop)`` slices into frame-sorted gt
    and prediction arrays; ``frame_code`` numbers each slot so that directly
    consecutive frames differ by one. Ids are dense integers. Predictions scoring below
    ``threshold`` are ignored. Pairs matched in the previous frame are kept
    first while within ``dist_th``; the rest are matched greedily by ascending
    2D distance.
    """
    n_frames = gt_start.shape[0]
    last_match = np.full(n_gt_ids, -1, dtype=np.int64)
    prev_trk = np.full(n_gt_ids, -1, dtype=np.int64)
    prev_stamp = np.full(n_gt_ids, -(2**62), dtype=np.int64)
    tp = 0
    fp = 0
    fn = 0
    ids = 0
    for f in range(n_frames):
        g0 = gt_start[f]
        g1 = gt_stop[f]
        p0 = pr_start[f]
        p1 = pr_stop[f]
        ng = g1 - g0
        npr = p1 - p0
        gt_match = np.full(ng, -1, dtype=np.int64)
        pr_matched = np.zeros(npr, dtype=np.bool_)
        n_valid = 0
        for q in range(npr):
            if pr_score[p0 + q] >= threshold:
                n_valid += 1
        # continuity: keep last frame's pairs when still close enough
        for a in range(ng):
            g = gt_id[g0 + a]
            if prev_stamp[g] != frame_code[f] - 1:
                continue
            k = prev_trk[g]
            for q in range(npr):
                p = p0 + q
                if pr_id[p] != k or pr_matched[q] or pr_score[p] < threshold:
                    continue
                dx = gt_xy[g0 + a, 0] - pr_xy[p, 0]
                dy = gt_xy[g0 + a, 1] - pr_xy[p, 1]
                if np.sqrt(dx * dx + dy * dy) <= dist_th:
                    gt_match[a] = q
                    pr_matched[q] = True
                break
        # greedy on the remainder, ascending distance
        n_cand = 0
        cand_d = np.empty(ng * npr)
        cand_a = np.empty(ng * npr, dtype=np.int64)
        cand_q = np.empty(ng * npr, dtype=np.int64)
        for a in range(ng):
            if gt_match[a] >= 0:
                continue
            for q in range(npr):
                p = p0 + q
                if pr_matched[q] or pr_score[p] < threshold:
                    continue
                dx = gt_xy[g0 + a, 0] - pr_xy[p, 0]
                dy = gt_xy[g0 + a, 1] - pr_xy[p, 1]
                d = np.sqrt(dx * dx + dy * dy)
                if d <= dist_th:
                    cand_d[n_cand] = d
                    cand_a[n_cand] = a
                    cand_q[n_cand] = q
                    n_cand += 1
        if n_cand > 0:
            order = np.argsort(cand_d[:n_cand], kind="mergesort")
            for t in range(n_cand):
                c = order[t]
                a = cand_a[c]
                q = cand_q[c]
                if gt_match[a] >= 0 or pr_matched[q]:
                    continue
                gt_match[a] = q
                pr_matched[q] = True
        n_tp = 0
        for a in range(ng):
            g = gt_id[g0 + a]
            q = gt_match[a]
            if q < 0:
                continue
            n_tp += 1
            k = pr_id[p0 + q]
            if last_match[g] >= 0 and last_match[g] != k:
                ids += 1
            last_match[g] = k
            prev_trk[g] = k
            prev_stamp[g] = frame_code[f]
        tp += n_tp
        fn += ng - n_tp
        fp += n_valid - n_tp
    return tp, fp, fn, ids


@jit
def clear_sweep(
    frame_code, gt_start, gt_stop, gt_id, gt_xy,
    pr_start, pr_stop, pr_id, pr_xy, pr_score,
    n_gt_ids, n_pr_ids, thresholds, dist_th,
):
    """:func:`clear_counts` at every threshold; returns a (T, 4) int array."""
    out = np.empty((thresholds.shape[0], 4), dtype=np.int64)
    for t in range(thresholds.shape[0]):
        tp, fp, fn, ids = clear_counts(
            frame_code, gt_start, gt_stop, gt_id, gt_xy,
            pr_start, pr_stop, pr_id, pr_xy, pr_score,
            n_gt_ids, n_pr_ids, thresholds[t], dist_th,
        )
        out[t, 0] = tp
        out[t, 1] = fp
        out[t, 2] = fn
        out[t, 3] = ids
    return out
