"""Motion models: a constant-velocity point tracker and a CA Kalman filter.

Both operate on the ground plane. Height, box extent and yaw are carried
through unchanged from the latest matched detection. Time is measured in
frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import Detection
from .errors import SingularCovariance

DEFAULT_JERK_SIGMA = 1.0
DEFAULT_MEAS_VAR = 0.25
INIT_COV_DIAG = (1.0, 1.0, 10.0, 10.0, 10.0, 10.0)
MAX_CONDITION = 1e12

_EYE6 = np.eye(6)
H = np.zeros((2, 6))
H[0, 0] = 1.0
H[1, 1] = 1.0


@dataclass(frozen=True)
class PointTrackerState:
    position: tuple[float, float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    last_matched_xy: tuple[float, float] = (0.0, 0.0)

    @property
    def xy(self) -> tuple[float, float]:
        return (self.position[0], self.position[1])


@dataclass(frozen=True)
class KalmanState:
    """Mean is ``(x, y, vx, vy, ax, ay)``; ``z`` rides along unfiltered."""

    mean: np.ndarray
    covariance: np.ndarray
    z: float = 0.0

    @property
    def xy(self) -> tuple[float, float]:
        return (float(self.mean[0]), float(self.mean[1]))

    @property
    def position(self) -> tuple[float, float, float]:
        return (float(self.mean[0]), float(self.mean[1]), self.z)


# -- point tracker ----------------------------------------------------------


def pt_init(d: Detection) -> PointTrackerState:
    return PointTrackerState(
        position=(d.cx, d.cy, d.cz), velocity=(0.0, 0.0), last_matched_xy=(d.cx, d.cy)
    )


def pt_predict(s: PointTrackerState, dt: int = 1) -> PointTrackerState:
    x, y, z = s.position
    vx, vy = s.velocity
    return PointTrackerState((x + vx * dt, y + vy * dt, z), s.velocity, s.last_matched_xy)


def pt_update(s: PointTrackerState, d: Detection, dt: int = 1) -> PointTrackerState:
    """Re-anchor on ``d``; velocity is the displacement since the last match over ``dt``."""
    px, py = s.last_matched_xy
    return PointTrackerState(
        position=(d.cx, d.cy, d.cz),
        velocity=((d.cx - px) / dt, (d.cy - py) / dt),
        last_matched_xy=(d.cx, d.cy),
    )


# -- Kalman filter ----------------------------------------------------------


def transition_matrix(dt: float) -> np.ndarray:
    F = np.eye(6)
    for k in range(2):
        F[k, 2 + k] = dt
        F[k, 4 + k] = 0.5 * dt * dt
        F[2 + k, 4 + k] = dt
    return F


def process_noise(dt: float, jerk_sigma: float = DEFAULT_JERK_SIGMA) -> np.ndarray:
    """Piecewise-constant white jerk, independently on x and y."""
    g = np.array([dt**3 / 6.0, dt**2 / 2.0, dt])
    block = np.outer(g, g) * jerk_sigma**2
    Q = np.zeros((6, 6))
    for k in range(2):
        idx = [k, 2 + k, 4 + k]
        Q[np.ix_(idx, idx)] = block
    return Q


def measurement_noise(meas_var: float = DEFAULT_MEAS_VAR) -> np.ndarray:
    return np.eye(2) * meas_var


def kf_init(d: Detection) -> KalmanState:
    mean = np.array([d.cx, d.cy, 0.0, 0.0, 0.0, 0.0])
    return KalmanState(mean=mean, covariance=np.diag(INIT_COV_DIAG), z=d.cz)


def kf_predict(
    s: KalmanState,
    dt: int = 1,
    jerk_sigma: float = DEFAULT_JERK_SIGMA,
    Q: np.ndarray | None = None,
) -> KalmanState:
    F = transition_matrix(dt)
    if Q is None:
        Q = process_noise(dt, jerk_sigma)
    P = F @ s.covariance @ F.T + Q
    P = 0.5 * (P + P.T)
    return KalmanState(mean=F @ s.mean, covariance=P, z=s.z)


def innovation_covariance(s: KalmanState, R: np.ndarray | None = None) -> np.ndarray:
    if R is None:
        R = measurement_noise()
    S = s.covariance[:2, :2] + R
    return 0.5 * (S + S.T)


def _inv2(S: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric 2x2 covariance, refusing ill-conditioned ones."""
    a, b, c = float(S[0, 0]), float(S[0, 1]), float(S[1, 1])
    if not (math.isfinite(a) and math.isfinite(b) and math.isfinite(c)):
        raise SingularCovariance("innovation covariance is not finite")
    half_tr = 0.5 * (a + c)
    r = math.hypot(0.5 * (a - c), b)
    lo, hi = half_tr - r, half_tr + r
    if lo <= 0.0 or hi > MAX_CONDITION * lo:
        raise SingularCovariance("innovation covariance is numerically singular")
    det = a * c - b * b
    return np.array([[c, -b], [-b, a]]) / det


def kf_update(s: KalmanState, d: Detection, R: np.ndarray | None = None) -> KalmanState:
    """Measurement update on ``(d.cx, d.cy)`` in Joseph form."""
    if R is None:
        R = measurement_noise()
    S = innovation_covariance(s, R)
    P = s.covariance
    K = P[:, :2] @ _inv2(S)  # P H^T S^-1
    residual = np.array([d.cx, d.cy]) - s.mean[:2]
    mean = s.mean + K @ residual
    A = _EYE6 - K @ H
    P_new = A @ P @ A.T + K @ R @ K.T
    P_new = 0.5 * (P_new + P_new.T)
    return KalmanState(mean=mean, covariance=P_new, z=d.cz)


def inverse_innovation(s: KalmanState, R: np.ndarray | None = None) -> np.ndarray:
    return _inv2(innovation_covariance(s, R))
