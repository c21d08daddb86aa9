"""Compare the numba kernels with the pure-numpy fallback.

Each backend runs in its own interpreter because the backend is fixed at
import time by ``SCORETRACK_DISABLE_NUMBA``.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from scoretrack import _accel, kernels
from scoretrack.domain import TrackerConfig, rows_from_outputs
from scoretrack.evaluation import evaluate
from scoretrack.pipeline import group_frames, run_sequence
from scoretrack.synth import ScenarioSpec, generate

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
spec = ScenarioSpec(seed=1, n_frames=100, n_objects=50, clutter_rate=5.0, dropout_prob=0.05)
gt, dets = generate(spec)
frames = group_frames(dets, range(spec.n_frames))
cfg = TrackerConfig(update_fn="complement_mult", score_decay=0.1, lifecycle="confidence_based",
                    active_threshold=0.75, max_age=None)
small = ScenarioSpec(seed=2, n_frames=40, n_objects=15, clutter_rate=3.0, dropout_prob=0.05)
sgt, sdets = generate(small)
srows = rows_from_outputs(run_sequence(cfg, group_frames(sdets, range(small.n_frames))), small.sequence)
cost = rng.uniform(0, 1, size=(150, 150))
a, b = rng.normal(size=(300, 3)), rng.normal(size=(300, 3))

cases = {
    "euclidean 300x300": lambda: kernels.euclidean_matrix(a, b, 2),
    "lsa 150x150": lambda: kernels.linear_sum_assignment(cost),
    "track 100f x 50 obj": lambda: run_sequence(cfg, frames),
    "evaluate 40f x 15 obj": lambda: evaluate(sgt, srows),
}
out = {"backend": _accel.backend_name()}
for name, fn in cases.items():
    times = []
    for _ in range(repeat + 1):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    out[name] = {"first": times[0], "best": min(times[1:])}
print(json.dumps(out))
"""


def run(disable: bool, repeat: int) -> dict:
    env = dict(os.environ, SCORETRACK_DISABLE_NUMBA="1" if disable else "0")
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    t0 = time.perf_counter()
    jit = run(False, args.repeat)
    ref = run(True, args.repeat)
    cases = [k for k in jit if k != "backend"]
    print(f"{'case':<24}{'numba s':>10}{'numpy s':>10}{'speedup':>9}{'jit warmup s':>14}")
    for name in cases:
        a, b = jit[name]["best"], ref[name]["best"]
        print(f"{name:<24}{a:>10.4f}{b:>10.4f}{b / a:>9.1f}{jit[name]['first']:>14.3f}")
    print(f"total wall time {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
