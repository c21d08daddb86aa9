"""Command-line entry point: ``synth``, ``track``, ``ensemble``, ``eval``, ``ablate``.

Exit status is 0 on success, 1 on invalid input or configuration, 2 on I/O
failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

from . import __version__
from .domain import TrackerConfig, outputs_from_rows, rows_from_outputs
from .ensemble import EnsembleConfig, fuse_streams
from .errors import ConfigError, IoFailure, ValidationError
from .evaluation import DEFAULT_DIST_TH, DEFAULT_RECALL_POINTS, MotarConvention, evaluate
from .io import (
    read_detections,
    read_gt,
    read_toml,
    read_tracker_config,
    read_tracks,
    write_detections,
    write_gt,
    write_tracks,
)
from .pipeline import group_frames, run_sequence
from .synth import SUITES, ScenarioSpec, generate, scenario_suite

ABLATE_COLUMNS = ("update_fn", "score_decay", "max_age", "amota", "mota", "fp", "fn", "ids")


class _UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are validation errors (exit 1)
        raise _UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# shared pieces
# ---------------------------------------------------------------------------


def track_detections(cfg: TrackerConfig, detections, jobs: int = 1):
    """Track every sequence of a detection list; rows come back in (sequence, frame) order.

    Frames missing between a sequence's first and last detection are fed to
    the tracker as empty frames.
    """
    by_seq: dict[str, list] = {}
    for d in detections:
        by_seq.setdefault(d.sequence, []).append(d)
    names = sorted(by_seq)

    def one(seq):
        dets = by_seq[seq]
        frames = [d.frame_index for d in dets]
        outs = run_sequence(cfg, group_frames(dets, range(min(frames), max(frames) + 1)))
        return rows_from_outputs(outs, seq)

    if jobs > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(one, names))
    else:
        parts = [one(s) for s in names]
    return [row for part in parts for row in part]


def _evaluate(gt, rows, args):
    return evaluate(gt, [r for r in rows if r.active], dist_th=args.dist_th,
                    n=args.recall_points, convention=args.motar_convention)


def _add_eval_flags(p):
    p.add_argument("--dist-th", type=float, default=DEFAULT_DIST_TH,
                   help="match distance threshold in meters (default %(default)s)")
    p.add_argument("--recall-points", type=int, default=DEFAULT_RECALL_POINTS,
                   help="number of recall grid points n (default %(default)s)")
    p.add_argument("--motar-convention", choices=[c.value for c in MotarConvention],
                   default=MotarConvention.DEVKIT.value)


def _check_eval_flags(args):
    if not (math.isfinite(args.dist_th) and args.dist_th > 0):
        raise ConfigError("--dist-th must be a positive number")
    if args.recall_points < 2:
        raise ConfigError("--recall-points must be at least 2")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    if (args.suite is None) == (args.config is None):
        raise ConfigError("give exactly one of --suite or --config")
    out = Path(args.out)
    if not out.is_dir():
        raise IoFailure(f"{out}: output directory does not exist")
    if args.suite is not None:
        base = args.seed_override if args.seed_override is not None else 0
        specs = scenario_suite(args.suite, args.count, base_seed=base)
    else:
        spec = ScenarioSpec.from_dict(read_toml(args.config))
        if args.seed_override is not None:
            spec = spec.replace(seed=args.seed_override)
        specs = [spec]
    gt_all, det_all = [], []
    for spec in specs:
        gt, dets = generate(spec)
        gt_all += gt
        det_all += dets
        print(f"{spec.sequence}: seed={spec.seed}")
    write_gt(out / "gt.jsonl", gt_all)
    write_detections(out / "det.jsonl", det_all)
    print(f"wrote {len(gt_all)} gt boxes and {len(det_all)} detections to {out}")
    return 0


def cmd_track(args) -> int:
    cfg = read_tracker_config(args.config)
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    rows = track_detections(cfg, read_detections(args.detections), args.jobs)
    write_tracks(args.out, rows)
    n_tracks = len({(r.sequence, r.track_id) for r in rows})
    n_seq = len({r.sequence for r in rows})
    print(f"sequences={n_seq} tracklets={n_tracks} rows={len(rows)}")
    return 0


def cmd_ensemble(args) -> int:
    cfg = EnsembleConfig.from_dict(read_toml(args.config))
    a = outputs_from_rows(read_tracks(args.tracks_a))
    b = outputs_from_rows(read_tracks(args.tracks_b))
    rows = []
    for seq in sorted(a.keys() | b.keys()):
        rows += rows_from_outputs(fuse_streams(cfg, a.get(seq, []), b.get(seq, [])), seq)
    write_tracks(args.out, rows)
    print(f"strategy={cfg.strategy.value} tracklets={len({(r.sequence, r.track_id) for r in rows})} "
          f"rows={len(rows)}")
    return 0


def cmd_eval(args) -> int:
    _check_eval_flags(args)
    report = _evaluate(read_gt(args.gt), read_tracks(args.tracks), args)
    out = Path(args.out)
    curve = Path(args.curve) if args.curve else out.with_name(out.stem + "_curve.csv")
    _write_json(out, report.to_dict())
    _write_csv(curve, ("class", "recall", "threshold", "motar", "tp", "fp", "fn", "ids"),
               report.curve_rows())
    print(report.table())
    return 0


def ablation_rows(base: TrackerConfig, grid: dict, detections, gt, args) -> list[dict]:
    """Track and evaluate every cell of ``update_fn x score_decay x max_age``."""
    axes = {
        "update_fn": grid.get("update_fn", [base.update_fn.value]),
        "score_decay": grid.get("score_decay", [base.score_decay]),
        "max_age": grid.get("max_age", [base.to_dict()["max_age"]]),
    }
    extra = sorted(set(grid) - set(axes))
    if extra:
        raise ConfigError(f"unknown grid axes: {', '.join(extra)}")
    for key, values in axes.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"grid axis {key!r} must be a non-empty list")
    rows = []
    for fn, sigma, age in itertools.product(*axes.values()):
        cfg = TrackerConfig.from_dict({**base.to_dict(), "update_fn": fn,
                                       "score_decay": sigma, "max_age": age})
        report = _evaluate(gt, track_detections(cfg, detections), args)
        rows.append({
            "update_fn": cfg.update_fn.value,
            "score_decay": cfg.score_decay,
            "max_age": "inf" if cfg.max_age is None else cfg.max_age,
            "amota": f"{report.amota:.6f}",
            "mota": f"{report.mota:.6f}",
            "fp": report.fp, "fn": report.fn, "ids": report.ids,
        })
    return rows


def cmd_ablate(args) -> int:
    _check_eval_flags(args)
    data = read_toml(args.config)
    unknown = sorted(set(data) - {"base", "grid"})
    if unknown:
        raise ConfigError(f"{args.config}: unknown tables: {', '.join(unknown)}")
    base = TrackerConfig.from_dict(data.get("base", {}))
    rows = ablation_rows(base, data.get("grid", {}), read_detections(args.detections),
                         read_gt(args.gt), args)
    _write_csv(Path(args.out), ABLATE_COLUMNS, rows)
    best = max(rows, key=lambda r: float(r["amota"]))
    print(f"cells={len(rows)} best: update_fn={best['update_fn']} score_decay={best['score_decay']} "
          f"max_age={best['max_age']} amota={best['amota']}")
    return 0


def _write_json(path: Path, data) -> None:
    if not path.parent.is_dir():
        raise IoFailure(f"{path}: parent directory {path.parent} does not exist")
    try:
        path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"{path}: cannot write ({exc.strerror or exc})") from exc


def _write_csv(path: Path, columns, rows) -> None:
    if not path.parent.is_dir():
        raise IoFailure(f"{path}: parent directory {path.parent} does not exist")
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    except OSError as exc:
        raise IoFailure(f"{path}: cannot write ({exc.strerror or exc})") from exc


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="scoretrack", description="Score-refined 3D multi-object tracking.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="generate synthetic gt and detection files")
    s.add_argument("--suite", choices=SUITES, help="built-in scenario suite")
    s.add_argument("--config", help="scenario spec TOML file")
    s.add_argument("--out", "--out-dir", dest="out", required=True, help="output directory")
    s.add_argument("--seed-override", type=int, help="replace the spec seed (suite: base seed)")
    s.add_argument("--count", type=int, default=20, help="scenarios per suite (default %(default)s)")
    s.set_defaults(func=cmd_synth)

    t = sub.add_parser("track", help="run the tracker over a detection file")
    t.add_argument("detections")
    t.add_argument("--config", required=True, help="tracker config TOML file")
    t.add_argument("--out", required=True, help="output track file")
    t.add_argument("--jobs", type=int, default=1, help="sequences tracked in parallel")
    t.set_defaults(func=cmd_track)

    e = sub.add_parser("ensemble", help="fuse two track files")
    e.add_argument("tracks_a")
    e.add_argument("tracks_b")
    e.add_argument("--config", required=True, help="ensemble config TOML file")
    e.add_argument("--out", required=True, help="output track file")
    e.set_defaults(func=cmd_ensemble)

    v = sub.add_parser("eval", help="score a track file against ground truth")
    v.add_argument("gt")
    v.add_argument("tracks")
    v.add_argument("--out", required=True, help="JSON report path")
    v.add_argument("--curve", help="MOTAR curve CSV path (default: <out>_curve.csv)")
    _add_eval_flags(v)
    v.set_defaults(func=cmd_eval)

    a = sub.add_parser("ablate", help="grid search over update_fn x score_decay x max_age")
    a.add_argument("detections")
    a.add_argument("gt")
    a.add_argument("--config", required=True, help="grid TOML file with [base] and [grid] tables")
    a.add_argument("--out", required=True, help="output CSV path")
    _add_eval_flags(a)
    a.set_defaults(func=cmd_ablate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
