import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from scoretrack import kernels
from scoretrack.association import (
    euclidean_cost,
    gated_cost_matrix,
    greedy_assign,
    hungarian_assign,
    mahalanobis_cost,
)
from scoretrack.errors import SingularCovariance

INF = np.inf


def brute_force(costs):
    """(cardinality, total) of the best admissible assignment: most matches, then least cost."""
    n, m = costs.shape
    best = (0, 0.0)
    if n == 0 or m == 0:
        return best
    k = min(n, m)
    rows = range(n)
    for perm in itertools.permutations(range(m), k) if n <= m else itertools.permutations(rows, k):
        pairs = zip(range(k), perm) if n <= m else zip(perm, range(k))
        cnt, total = 0, 0.0
        for i, j in pairs:
            if np.isfinite(costs[i, j]):
                cnt += 1
                total += costs[i, j]
        if cnt > best[0] or (cnt == best[0] and total < best[1]):
            best = (cnt, total)
    return best


def _summary(res):
    return len(res.matches), sum(c for _, _, c in res.matches)


def _partition_ok(res, n, m):
    dets = sorted([j for _, j, _ in res.matches] + list(res.unmatched_detections))
    trks = sorted([i for i, _, _ in res.matches] + list(res.unmatched_tracklets))
    return dets == list(range(m)) and trks == list(range(n))


def test_euclidean_examples():
    assert euclidean_cost((0, 0, 0), (3, 4, 0)) == 5.0
    assert euclidean_cost((1, 1, 1), (1, 1, 1)) == 0.0
    assert euclidean_cost((0, 0, 0), (1, 2, 2), "3d") == pytest.approx(3.0)
    assert euclidean_cost((0, 0, 0), (1, 2, 2), "2d") == pytest.approx(5 ** 0.5)


def test_mahalanobis_examples():
    assert mahalanobis_cost((0, 0), np.eye(2), (3, 4)) == pytest.approx(25.0)
    assert mahalanobis_cost((0, 0), np.diag([4.0, 4.0]), (2, 0)) == pytest.approx(1.0)
    assert mahalanobis_cost((1, 1), np.eye(2), (1, 1)) == 0.0


def test_mahalanobis_singular():
    with pytest.raises(SingularCovariance):
        mahalanobis_cost((0, 0), np.zeros((2, 2)), (1, 1))


@given(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), st.tuples(st.floats(-50, 50), st.floats(-50, 50)))
def test_mahalanobis_identity_is_squared_euclidean(a, b):
    expected = euclidean_cost((*a, 0), (*b, 0)) ** 2
    assert mahalanobis_cost(a, np.eye(2), b) == pytest.approx(expected, rel=1e-9, abs=1e-9)


def test_gating_sets_cross_class_and_far_to_inf():
    out = gated_cost_matrix(np.array([[1.0, 3.0], [0.5, 0.2]]), 2.0, ["car", "car"], ["car", "ped"])
    assert out[0, 0] == 1.0
    assert np.isinf(out[0, 1]) and np.isinf(out[1, 1])
    assert out[1, 0] == 0.5


def test_greedy_examples():
    res = greedy_assign(np.array([[0.5]]), [0.9], gate=2.0)
    assert res.matches == ((0, 0, 0.5),)
    res = greedy_assign(np.full((2, 2), INF), [0.9, 0.8])
    assert res.matches == () and res.unmatched_detections == (0, 1)
    res = greedy_assign(np.array([[1.0, 2.0], [1.5, 10.0]]), [0.9, 0.8])
    assert {(i, j) for i, j, _ in res.matches} == {(0, 0), (1, 1)}
    assert _summary(res)[1] == 11.0


def test_greedy_ties_visit_lower_index_first():
    res = greedy_assign(np.array([[1.0, 0.5]]), [0.7, 0.7])
    assert res.matches == ((0, 0, 1.0),)


def test_hungarian_examples():
    res = hungarian_assign(np.array([[1.0, 2.0], [1.5, 10.0]]))
    assert {(i, j) for i, j, _ in res.matches} == {(0, 1), (1, 0)}
    assert _summary(res)[1] == pytest.approx(3.5)
    diag = np.array([[0.1, 5, 5], [5, 0.2, 5], [5, 5, 0.3]])
    assert {(i, j) for i, j, _ in hungarian_assign(diag).matches} == {(0, 0), (1, 1), (2, 2)}
    res = hungarian_assign(np.zeros((0, 4)))
    assert res.unmatched_detections == (0, 1, 2, 3) and res.matches == ()


def test_hungarian_keeps_cardinality_over_cost():
    # the cheap pair (0,0) would block row 1 entirely
    costs = np.array([[0.1, 1.9], [1.0, INF]])
    assert _summary(hungarian_assign(costs)) == (2, pytest.approx(2.9))


def test_row_ids_are_reported():
    res = hungarian_assign(np.array([[1.0], [0.2]]), row_ids=[7, 9])
    assert res.matches == ((9, 0, 0.2),) and res.unmatched_tracklets == (7,)


def test_hungarian_matches_brute_force_on_random_small_matrices():
    rng = np.random.default_rng(2024)
    for case in range(1000):
        n, m = rng.integers(0, 7, size=2)
        costs = rng.uniform(0, 3, size=(n, m))
        if case % 2:
            costs[rng.random((n, m)) < 0.3] = INF
        res = hungarian_assign(costs)
        cnt, total = _summary(res)
        b_cnt, b_total = brute_force(costs)
        assert cnt == b_cnt
        assert abs(total - b_total) < 1e-9
        assert _partition_ok(res, n, m)


def test_lsa_kernel_matches_brute_force_on_dense_matrices():
    rng = np.random.default_rng(5)
    for _ in range(300):
        n, m = rng.integers(1, 7, size=2)
        costs = rng.normal(size=(n, m))
        rows, cols = kernels.linear_sum_assignment(costs)
        assert len(rows) == min(n, m)
        assert abs(costs[rows, cols].sum() - brute_force(costs)[1]) < 1e-9


def test_lsa_rejects_non_finite():
    with pytest.raises(ValueError):
        kernels.linear_sum_assignment(np.array([[INF]]))


cost_mats = st.integers(0, 6).flatmap(lambda n: st.integers(0, 6).flatmap(
    lambda m: arrays(np.float64, (n, m), elements=st.one_of(st.floats(0, 5), st.just(INF)))))


@given(cost_mats, st.floats(0.5, 5))
def test_partition_and_gate_respected(costs, gate):
    n, m = costs.shape
    scores = np.linspace(1, 0, m) if m else np.zeros(0)
    for res in (greedy_assign(costs, scores, gate=gate), hungarian_assign(costs, gate=gate)):
        assert _partition_ok(res, n, m)
        assert all(c <= gate for _, _, c in res.matches)


@given(st.integers(1, 6), st.data())
def test_greedy_equals_hungarian_when_non_conflicting(n, data):
    perm = data.draw(st.permutations(range(n)))
    costs = np.full((n, n), 5.0)
    for i, j in enumerate(perm):
        costs[i, j] = data.draw(st.floats(0.0, 1.0))
    scores = data.draw(arrays(np.float64, n, elements=st.floats(0, 1)))
    g = {(i, j) for i, j, _ in greedy_assign(costs, scores).matches}
    h = {(i, j) for i, j, _ in hungarian_assign(costs).matches}
    assert g == h == set(enumerate(perm))
