"""Tracklet score refinement.

Every live tracklet loses a constant ``sigma`` of confidence per frame
(:func:`decay_score`). When a tracklet is matched, its decayed score and the
detection score are merged by one of the update functions below. All of them
except :func:`fuse_overwrite` return at least ``max(c_hat, s)``; they differ in
how aggressively one match raises the score. ``max`` is the gentlest and
``add`` the most aggressive; ``complement_parallel`` sits below
``complement_mult`` only when ``c_hat + s >= 1`` and above it otherwise.

Outputs are clamped to [0, 1].
"""

from __future__ import annotations

from typing import Callable

from .domain import TrackerConfig, UpdateFn, clamp01


def decay_score(c_prev: float, sigma: float) -> float:
    """Predicted score one frame ahead, floored at zero."""
    return max(0.0, c_prev - sigma)


def fuse_overwrite(c_hat: float, s: float) -> float:
    """Count-based behaviour: the detection score replaces the history."""
    return clamp01(s)


def fuse_add(c_hat: float, s: float) -> float:
    return min(1.0, c_hat + s)


def fuse_max(c_hat: float, s: float) -> float:
    return max(c_hat, s)


def fuse_complement_mult(c_hat: float, s: float) -> float:
    # product of the two uncertainties
    return clamp01(1.0 - (1.0 - c_hat) * (1.0 - s))


def fuse_complement_parallel(c_hat: float, s: float) -> float:
    """Combine the uncertainties like parallel resistors.

    Both scores equal to one leaves 0/0; the limit from inside the unit
    square is 1, which is returned.
    """
    a = 1.0 - c_hat
    b = 1.0 - s
    denom = a + b
    if denom <= 0.0:
        return 1.0
    return clamp01(1.0 - (a * b) / denom)


UPDATE_FUNCTIONS: dict[UpdateFn, Callable[[float, float], float]] = {
    UpdateFn.OVERWRITE: fuse_overwrite,
    UpdateFn.ADD: fuse_add,
    UpdateFn.MAX: fuse_max,
    UpdateFn.COMPLEMENT_MULT: fuse_complement_mult,
    UpdateFn.COMPLEMENT_PARALLEL: fuse_complement_parallel,
}


def update_function(kind: UpdateFn | str) -> Callable[[float, float], float]:
    return UPDATE_FUNCTIONS[UpdateFn(kind)]


def refine_on_match(tracklet_score: float, detection_score: float, cfg: TrackerConfig) -> float:
    """Apply the configured update function to an already-decayed score."""
    return UPDATE_FUNCTIONS[cfg.update_fn](tracklet_score, detection_score)
