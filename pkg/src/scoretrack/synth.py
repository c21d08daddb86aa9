"""Seeded synthetic scenes: exact ground truth plus corrupted detections.

Randomness comes from numpy's PCG64 bit generator seeded with ``spec.seed``.
Draw order is fixed so streams are reproducible:

1. per object, in index order: class, two layout uniforms, heading, speed,
   yaw rate;
2. per static false-positive source, in index order: x, y, yaw, class;
3. per frame, in frame order:
   a. position noise, two normals per object (drawn even for dropped objects),
   b. dropout, one uniform per object,
   c. clutter count, one Poisson draw,
   d. clutter placement, per clutter box: x, y, yaw, class,
   e. static sources, per source: one firing uniform then two noise normals,
   f. scores, true positives in object order, then clutter, then static
      sources that fired.

When ``detection_seed`` is set, steps 2 and 3 draw from a second PCG64
generator seeded with it, so several detector streams can share one ground
truth.

Static sources model detector false positives that recur at a fixed place
(reflections, parked clutter): each fires independently with
``static_fp_prob`` per frame.

Layouts other than ``random`` place objects deterministically from the same
draws (see :func:`_layout`).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .domain import Detection, GtAnnotation, normalize_angle
from .errors import InvalidSpec

DEFAULT_CLASSES: tuple[tuple[str, tuple[float, float, float]], ...] = (
    ("car", (4.5, 1.9, 1.6)),
    ("pedestrian", (0.8, 0.7, 1.8)),
)
LAYOUTS = ("random", "lanes", "crossing")
SUITES = ("easy", "occlusion", "clutter", "crossing")
SUITE_VERSION = 1


@dataclass(frozen=True)
class ScenarioSpec:
    """Scene description. Units are meters and frames.

    ``occlusions`` holds ``(object_index, first_frame, last_frame)`` windows,
    inclusive at both ends, during which the object produces no detection.
    """

    seed: int = 0
    n_frames: int = 40
    n_objects: int = 8
    classes: tuple[tuple[str, tuple[float, float, float]], ...] = DEFAULT_CLASSES
    layout: str = "random"
    speed_range: tuple[float, float] = (0.3, 1.2)
    yaw_rate_sigma: float = 0.0
    arena: tuple[float, float, float, float] = (-40.0, 40.0, -40.0, 40.0)
    position_noise_sigma: float = 0.1
    dropout_prob: float = 0.0
    clutter_rate: float = 0.0
    tp_score_dist: tuple[float, float] = (8.0, 2.0)
    fp_score_dist: tuple[float, float] = (2.0, 5.0)
    occlusions: tuple[tuple[int, int, int], ...] = ()
    n_static_fp: int = 0
    static_fp_prob: float = 0.5
    detection_seed: int | None = None
    name: str = ""

    def __post_init__(self) -> None:
        try:
            self._validate()
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InvalidSpec):
                raise
            raise InvalidSpec(str(exc)) from exc

    def _validate(self) -> None:
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidSpec("seed must be a 64-bit unsigned integer")
        if self.detection_seed is not None and not 0 <= int(self.detection_seed) < 2**64:
            raise InvalidSpec("detection_seed must be a 64-bit unsigned integer")
        if self.n_frames < 1:
            raise InvalidSpec("n_frames must be >= 1")
        if self.n_objects < 0:
            raise InvalidSpec("n_objects must be >= 0")
        if not self.classes:
            raise InvalidSpec("at least one class required")
        for label, ext in self.classes:
            if len(ext) != 3 or min(ext) <= 0:
                raise InvalidSpec(f"class {label!r}: extent must be three positive numbers")
        if self.layout not in LAYOUTS:
            raise InvalidSpec(f"layout must be one of {LAYOUTS}")
        lo, hi = self.speed_range
        if lo < 0 or hi < lo:
            raise InvalidSpec("speed_range must satisfy 0 <= lo <= hi")
        x0, x1, y0, y1 = self.arena
        if not (x1 > x0 and y1 > y0):
            raise InvalidSpec("arena must have positive area")
        if self.position_noise_sigma < 0 or self.yaw_rate_sigma < 0:
            raise InvalidSpec("noise levels must be non-negative")
        if not 0.0 <= self.dropout_prob <= 1.0:
            raise InvalidSpec("dropout_prob must lie in [0, 1]")
        if not 0.0 <= self.static_fp_prob <= 1.0:
            raise InvalidSpec("static_fp_prob must lie in [0, 1]")
        if self.n_static_fp < 0:
            raise InvalidSpec("n_static_fp must be >= 0")
        if self.clutter_rate < 0 or not math.isfinite(self.clutter_rate):
            raise InvalidSpec("clutter_rate must be a finite non-negative rate")
        for a, b in (self.tp_score_dist, self.fp_score_dist):
            if a <= 0 or b <= 0:
                raise InvalidSpec("Beta parameters must be positive")
        for obj, first, last in self.occlusions:
            if not 0 <= obj < self.n_objects or last < first:
                raise InvalidSpec(f"bad occlusion window {(obj, first, last)}")

    def replace(self, **changes: Any) -> "ScenarioSpec":
        return dataclasses.replace(self, **changes)

    @property
    def sequence(self) -> str:
        return self.name or f"seed{self.seed}"

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["classes"] = [[label, list(ext)] for label, ext in self.classes]
        for key in ("speed_range", "arena", "tp_score_dist", "fp_score_dist"):
            d[key] = list(d[key])
        d["occlusions"] = [list(o) for o in self.occlusions]
        if d["detection_seed"] is None:
            del d["detection_seed"]
        return d

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ScenarioSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidSpec(f"unknown scenario keys: {', '.join(unknown)}")
        kw = dict(data)
        try:
            if "classes" in kw:
                kw["classes"] = tuple((str(c[0]), tuple(float(v) for v in c[1])) for c in kw["classes"])
            for key in ("speed_range", "arena", "tp_score_dist", "fp_score_dist"):
                if key in kw:
                    kw[key] = tuple(float(v) for v in kw[key])
            if "occlusions" in kw:
                kw["occlusions"] = tuple(tuple(int(v) for v in o) for o in kw["occlusions"])
        except (TypeError, ValueError, IndexError) as exc:
            raise InvalidSpec(f"malformed scenario: {exc}") from exc
        return cls(**kw)


@dataclass
class _Object:
    cls: int
    x: float
    y: float
    heading: float
    speed: float
    yaw_rate: float
    trajectory: list[tuple[float, float, float]] = field(default_factory=list)


def _layout(spec: ScenarioSpec, rng: np.random.Generator) -> list[_Object]:
    x0, x1, y0, y1 = spec.arena
    lo, hi = spec.speed_range
    objs = []
    meet = None
    for k in range(spec.n_objects):
        c = int(rng.integers(len(spec.classes)))
        u = rng.random(2)
        heading = float(rng.uniform(-math.pi, math.pi))
        speed = float(rng.uniform(lo, hi))
        omega = float(rng.normal(0.0, spec.yaw_rate_sigma))
        if spec.layout == "random":
            x = x0 + 0.5 * (x1 - x0) * (0.5 + u[0])
            y = y0 + 0.5 * (y1 - y0) * (0.5 + u[1])
        elif spec.layout == "lanes":
            # parallel lanes 10 m apart, all heading +x
            x = x0 + 0.25 * (x1 - x0) * u[0]
            y = 10.0 * (k - (spec.n_objects - 1) / 2.0)
            heading, omega = 0.0, 0.0
        else:
            # crossing: consecutive objects form a same-class pair meeting mid-sequence
            if k % 2 == 0:
                meet = (x0 + 0.5 * (x1 - x0) * (0.5 + u[0]),
                        y0 + 0.5 * (y1 - y0) * (0.5 + u[1]), heading, c)
            else:
                heading = meet[2] + math.copysign(0.35 + 0.4 * u[0], u[1] - 0.5)
                c = meet[3]
            t_meet = 0.5 * (spec.n_frames - 1)
            x = meet[0] - speed * math.cos(heading) * t_meet
            y = meet[1] - speed * math.sin(heading) * t_meet
            omega = 0.0
        objs.append(_Object(c, float(x), float(y), heading, speed, omega))
    for o in objs:
        x, y, h = o.x, o.y, o.heading
        for _ in range(spec.n_frames):
            o.trajectory.append((x, y, h))
            x += o.speed * math.cos(h)
            y += o.speed * math.sin(h)
            h += o.yaw_rate
    return objs


def generate(spec: ScenarioSpec) -> tuple[list[GtAnnotation], list[Detection]]:
    """Ground truth and detections for one scenario; a pure function of ``spec``."""
    rng = np.random.Generator(np.random.PCG64(int(spec.seed)))
    objs = _layout(spec, rng)
    if spec.detection_seed is not None:
        rng = np.random.Generator(np.random.PCG64(int(spec.detection_seed)))
    seq = spec.sequence
    x0, x1, y0, y1 = spec.arena
    sources = [
        (float(rng.uniform(x0, x1)), float(rng.uniform(y0, y1)),
         float(rng.uniform(-math.pi, math.pi)), int(rng.integers(len(spec.classes))))
        for _ in range(spec.n_static_fp)
    ]
    occluded = set()
    for obj, first, last in spec.occlusions:
        for f in range(first, last + 1):
            occluded.add((obj, f))

    gt: list[GtAnnotation] = []
    dets: list[Detection] = []
    n = len(objs)
    for f in range(spec.n_frames):
        noise = rng.normal(0.0, 1.0, size=(n, 2)) * spec.position_noise_sigma
        drop = rng.random(n) < spec.dropout_prob
        n_clutter = int(rng.poisson(spec.clutter_rate))
        clutter = []
        for _ in range(n_clutter):
            cx = float(rng.uniform(x0, x1))
            cy = float(rng.uniform(y0, y1))
            cyaw = float(rng.uniform(-math.pi, math.pi))
            cc = int(rng.integers(len(spec.classes)))
            clutter.append((cx, cy, cyaw, cc))
        for sx, sy, syaw, sc in sources:
            fires = rng.random() < spec.static_fp_prob
            ns = rng.normal(0.0, 1.0, size=2) * spec.position_noise_sigma
            if fires:
                clutter.append((sx + float(ns[0]), sy + float(ns[1]), syaw, sc))
        visible = [k for k in range(n) if not drop[k] and (k, f) not in occluded]
        tp_scores = rng.beta(*spec.tp_score_dist, size=len(visible))
        fp_scores = rng.beta(*spec.fp_score_dist, size=len(clutter))

        for k, o in enumerate(objs):
            x, y, h = o.trajectory[f]
            label, ext = spec.classes[o.cls]
            gt.append(GtAnnotation(f, k + 1, label, (x, y, ext[2] / 2.0), ext,
                                   normalize_angle(h), seq))
        for s, k in zip(tp_scores, visible):
            o = objs[k]
            x, y, h = o.trajectory[f]
            label, ext = spec.classes[o.cls]
            dets.append(Detection(f, label, float(x + noise[k, 0]), float(y + noise[k, 1]),
                                  ext[2] / 2.0, *ext, normalize_angle(h), float(s), seq))
        for s, (cx, cy, cyaw, cc) in zip(fp_scores, clutter):
            label, ext = spec.classes[cc]
            dets.append(Detection(f, label, cx, cy, ext[2] / 2.0, *ext,
                                  normalize_angle(cyaw), float(s), seq))
    return gt, dets


def _occlusion_windows(rng: np.random.Generator, n_objects: int, n_frames: int):
    windows = []
    for k in range(n_objects):
        for _ in range(int(rng.integers(1, 3))):
            length = int(rng.integers(2, 6))  # 2..5 frames
            first = int(rng.integers(1, max(2, n_frames - length)))
            windows.append((k, first, first + length - 1))
    return tuple(windows)


def scenario_suite(name: str, n: int = 20, base_seed: int = 0) -> list[ScenarioSpec]:
    """Fixed scenario lists (version ``SUITE_VERSION``) used by the acceptance runs."""
    if name not in SUITES:
        raise InvalidSpec(f"unknown suite {name!r}; expected one of {SUITES}")
    specs = []
    for i in range(n):
        seed = base_seed + 1000 * (SUITES.index(name) + 1) + i
        if name == "easy":
            spec = ScenarioSpec(seed=seed, n_objects=6, layout="lanes",
                                position_noise_sigma=0.0, name=f"easy-{i:02d}")
        elif name == "occlusion":
            rng = np.random.Generator(np.random.PCG64(seed ^ 0x5EED))
            spec = ScenarioSpec(seed=seed, position_noise_sigma=0.1, dropout_prob=0.05,
                                clutter_rate=1.0,
                                occlusions=_occlusion_windows(rng, 8, 40),
                                name=f"occlusion-{i:02d}")
        elif name == "clutter":
            spec = ScenarioSpec(seed=seed, position_noise_sigma=0.1, dropout_prob=0.05,
                                clutter_rate=6.0, n_static_fp=6, static_fp_prob=0.5,
                                name=f"clutter-{i:02d}")
        else:
            spec = ScenarioSpec(seed=seed, layout="crossing", position_noise_sigma=0.15,
                                dropout_prob=0.1, speed_range=(0.6, 1.2),
                                name=f"crossing-{i:02d}")
        specs.append(spec)
    return specs
