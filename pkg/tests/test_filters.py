import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scoretrack.errors import SingularCovariance
from scoretrack.filters import (
    H,
    KalmanState,
    innovation_covariance,
    kf_init,
    kf_predict,
    kf_update,
    process_noise,
    pt_init,
    pt_predict,
    pt_update,
    transition_matrix,
)

from helpers import det


def _pt(pos, vel):
    s = pt_init(det(x=pos[0], y=pos[1]))
    return s.__class__(position=(pos[0], pos[1], 0.0), velocity=vel, last_matched_xy=pos)


@pytest.mark.parametrize("pos, vel, dt, expected", [
    ((0, 0), (1, 2), 1, (1, 2)),
    ((3, 4), (0, 0), 1, (3, 4)),
    ((1, 1), (-1, 0), 2, (-1, 1)),
])
def test_pt_predict_examples(pos, vel, dt, expected):
    assert pt_predict(_pt(pos, vel), dt).xy == pytest.approx(expected)


@pytest.mark.parametrize("new, dt, vel", [((2, 0), 1, (2, 0)), ((0, 0), 1, (0, 0)), ((3, 3), 3, (1, 1))])
def test_pt_update_examples(new, dt, vel):
    s = pt_update(_pt((0, 0), (9, 9)), det(x=new[0], y=new[1]), dt)
    assert s.velocity == pytest.approx(vel)
    assert s.xy == pytest.approx(new)


@given(st.integers(1, 10), st.floats(-5, 5), st.floats(-5, 5))
def test_pt_missed_frames_compose(k, vx, vy):
    s = _pt((1.0, -2.0), (vx, vy))
    stepwise = s
    for _ in range(k):
        stepwise = pt_predict(stepwise, 1)
    assert stepwise.xy == pytest.approx(pt_predict(s, k).xy, abs=1e-9)


def test_pt_exact_on_constant_velocity():
    truth = [(0.5 * t, -0.25 * t) for t in range(10)]
    s = pt_init(det(x=truth[0][0], y=truth[0][1]))
    for t in range(1, 10):
        p = pt_predict(s, 1)
        if t >= 2:
            assert p.xy == pytest.approx(truth[t], abs=1e-12)
        s = pt_update(p, det(x=truth[t][0], y=truth[t][1]), 1)


def _kstate(mean, P=None):
    return KalmanState(np.asarray(mean, dtype=float), np.eye(6) if P is None else P)


def test_kf_predict_velocity_and_acceleration():
    s = kf_predict(_kstate([0, 0, 1, 0, 0, 0]), 1)
    assert s.xy == pytest.approx((1.0, 0.0))
    s = kf_predict(_kstate([0, 0, 0, 0, 2, 0]), 1)
    assert s.mean[0] == pytest.approx(1.0)
    assert s.mean[2] == pytest.approx(2.0)


def test_kf_predict_without_noise_is_fpft():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(6, 6))
    P = A @ A.T
    F = transition_matrix(2)
    s = kf_predict(_kstate(np.zeros(6), P), 2, Q=np.zeros((6, 6)))
    assert np.allclose(s.covariance, F @ P @ F.T, atol=1e-12)


def test_process_noise_matches_jerk_model():
    # oracle: G G^T with G = [dt^3/6, dt^2/2, dt] for one axis
    dt = 2.0
    G = np.array([dt**3 / 6, dt**2 / 2, dt])
    Q = process_noise(dt, 0.5)
    assert np.allclose(Q[np.ix_([0, 2, 4], [0, 2, 4])], 0.25 * np.outer(G, G))
    assert np.allclose(Q[np.ix_([0, 2, 4], [1, 3, 5])], 0.0)


def test_innovation_examples():
    assert np.allclose(innovation_covariance(_kstate(np.zeros(6)), np.eye(2)), 2 * np.eye(2))
    R = np.diag([0.3, 0.7])
    assert np.allclose(innovation_covariance(_kstate(np.zeros(6), np.zeros((6, 6))), R), R)


def test_innovation_psd_on_random_covariances():
    rng = np.random.default_rng(1)
    for _ in range(100):
        A = rng.normal(size=(6, 6))
        S = innovation_covariance(_kstate(np.zeros(6), A @ A.T))
        assert np.allclose(S, S.T)
        assert np.linalg.eigvalsh(S).min() >= -1e-12


def test_zero_prior_ignores_measurement():
    s = _kstate([1, 2, 0, 0, 0, 0], np.zeros((6, 6)))
    out = kf_update(s, det(x=50.0, y=-50.0))
    assert out.xy == pytest.approx((1.0, 2.0))


def test_tiny_r_snaps_to_measurement():
    s = _kstate(np.zeros(6), 100.0 * np.eye(6))
    out = kf_update(s, det(x=3.0, y=-4.0), 1e-9 * np.eye(2))
    assert out.xy == pytest.approx((3.0, -4.0), abs=1e-6)


def test_singular_innovation_raises():
    s = _kstate(np.zeros(6), np.zeros((6, 6)))
    with pytest.raises(SingularCovariance):
        kf_update(s, det(), np.zeros((2, 2)))


def test_covariance_stays_symmetric_psd_over_random_cycles():
    rng = np.random.default_rng(7)
    s = kf_init(det())
    worst_asym = 0.0
    worst_eig = np.inf
    for _ in range(1000):
        s = kf_predict(s, int(rng.integers(1, 4)), float(rng.uniform(0.1, 3.0)))
        if rng.random() < 0.8:
            x, y = rng.normal(s.xy, 2.0)
            s = kf_update(s, det(x=float(x), y=float(y)), np.eye(2) * rng.uniform(0.01, 2.0))
        P = s.covariance
        worst_asym = max(worst_asym, float(np.abs(P - P.T).max()))
        worst_eig = min(worst_eig, float(np.linalg.eigvalsh(P).min()))
    assert worst_asym < 1e-9
    assert worst_eig > -1e-9


def _noise_free_errors(n=20):
    v = np.array([1.3, -0.7])
    s = kf_init(det(x=0.0, y=0.0))
    R = 1e-12 * np.eye(2)
    errs, innov = [], []
    for t in range(1, n + 1):
        s = kf_predict(s, 1, Q=np.zeros((6, 6)))
        truth = v * t
        innov.append(float(np.linalg.norm(truth - H @ s.mean)))
        s = kf_update(s, det(x=float(truth[0]), y=float(truth[1])), R)
        errs.append(float(np.linalg.norm(np.asarray(s.xy) - truth)))
    return errs, innov


def test_noise_free_convergence_within_20_frames():
    errs, _ = _noise_free_errors(20)
    assert errs[-1] < 1e-6


def test_innovation_norm_decreasing_on_constant_velocity():
    _, innov = _noise_free_errors(10)
    # after the filter has seen two positions, the innovation shrinks monotonically
    tail = innov[2:]
    assert all(b <= a + 1e-9 for a, b in zip(tail, tail[1:]))
    assert tail[-1] < 1e-3
