"""Line-delimited JSON record files and TOML configuration files.

Every record file starts with a header line naming its schema, e.g.
``{"schema": "scoretrack.detections", "version": 1}``, followed by one JSON
object per line. An optional ``sequence`` field partitions a file into
independent streams; frames must be non-decreasing within each sequence.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping

from .domain import Detection, GtAnnotation, TrackerConfig, TrackRow, normalize_angle
from .errors import ConfigError, IoFailure, ParseError, ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

import tomli_w

SCHEMA_VERSION = 1
DETECTIONS = "scoretrack.detections"
GT = "scoretrack.gt"
TRACKS = "scoretrack.tracks"

_BOX = ("x", "y", "z", "l", "w", "h", "yaw")


# ---------------------------------------------------------------------------
# low-level helpers
# ---------------------------------------------------------------------------


def _open_read(path: Path):
    try:
        return open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"{path}: cannot read ({exc.strerror or exc})") from exc


def _write_text(path: Path, text: str) -> None:
    path = Path(path)
    if not path.parent.is_dir():
        raise IoFailure(f"{path}: parent directory {path.parent} does not exist")
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"{path}: cannot write ({exc.strerror or exc})") from exc


def _num(rec: Mapping, key: str) -> float:
    v = rec[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"field {key!r} must be a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"field {key!r} must be finite")
    return v


def _int(rec: Mapping, key: str) -> int:
    v = rec[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValueError(f"field {key!r} must be an integer, got {v!r}")
    return v


def _str(rec: Mapping, key: str, default: str | None = None) -> str:
    v = rec.get(key, default)
    if not isinstance(v, str):
        raise ValueError(f"field {key!r} must be a string, got {v!r}")
    return v


def _read_records(path, schema: str, build: Callable[[dict], Any]) -> list:
    path = Path(path)
    out = []
    last_frame: dict[str, int] = {}
    with _open_read(path) as fh:
        header_seen = False
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(path), lineno, f"invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise ParseError(str(path), lineno, "expected a JSON object")
            if not header_seen:
                if rec.get("schema") != schema:
                    raise ParseError(str(path), lineno, f"expected header with schema {schema!r}")
                if rec.get("version") != SCHEMA_VERSION:
                    raise ParseError(str(path), lineno,
                                     f"unsupported version {rec.get('version')!r}")
                header_seen = True
                continue
            try:
                item = build(rec)
            except KeyError as exc:
                raise ParseError(str(path), lineno, f"missing field {exc.args[0]!r}") from None
            except (ValueError, TypeError) as exc:
                raise ParseError(str(path), lineno, str(exc)) from None
            seq = item.sequence
            if item.frame_index < last_frame.get(seq, -1):
                raise ParseError(str(path), lineno,
                                 f"frame {item.frame_index} after frame {last_frame[seq]}")
            last_frame[seq] = item.frame_index
            out.append(item)
        if not header_seen:
            raise ParseError(str(path), 1, "missing schema header")
    return out


def _write_records(path, schema: str, records: Iterable[dict]) -> None:
    lines = [json.dumps({"schema": schema, "version": SCHEMA_VERSION})]
    lines += [json.dumps(r, allow_nan=False) for r in records]
    _write_text(Path(path), "\n".join(lines) + "\n")


def _with_sequence(rec: dict, sequence: str) -> dict:
    if sequence:
        rec["sequence"] = sequence
    return rec


def _frame(rec: Mapping) -> int:
    f = _int(rec, "frame")
    if f < 0:
        raise ValueError("frame must be non-negative")
    return f


# ---------------------------------------------------------------------------
# detections / gt / tracks
# ---------------------------------------------------------------------------


def _detection(rec: dict) -> Detection:
    x, y, z, l, w, h, yaw = (_num(rec, k) for k in _BOX)
    score = _num(rec, "score")
    if min(l, w, h) <= 0:
        raise ValueError("box extent must be positive")
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"score {score} outside [0, 1]")
    return Detection(_frame(rec), _str(rec, "class"), x, y, z, l, w, h,
                     normalize_angle(yaw), score, _str(rec, "sequence", ""))


def read_detections(path) -> list[Detection]:
    return _read_records(path, DETECTIONS, _detection)


def write_detections(path, detections: Iterable[Detection]) -> None:
    _write_records(path, DETECTIONS, (
        _with_sequence({
            "frame": d.frame_index, "class": d.class_label,
            "x": d.cx, "y": d.cy, "z": d.cz, "l": d.length, "w": d.width, "h": d.height,
            "yaw": d.yaw, "score": d.score,
        }, d.sequence)
        for d in detections
    ))


def _gt(rec: dict) -> GtAnnotation:
    x, y, z, l, w, h, yaw = (_num(rec, k) for k in _BOX)
    if min(l, w, h) <= 0:
        raise ValueError("box extent must be positive")
    return GtAnnotation(_frame(rec), _int(rec, "instance_id"), _str(rec, "class"),
                        (x, y, z), (l, w, h), yaw, _str(rec, "sequence", ""))


def read_gt(path) -> list[GtAnnotation]:
    return _read_records(path, GT, _gt)


def write_gt(path, annotations: Iterable[GtAnnotation]) -> None:
    _write_records(path, GT, (
        _with_sequence({
            "frame": g.frame_index, "instance_id": g.instance_id, "class": g.class_label,
            "x": g.center[0], "y": g.center[1], "z": g.center[2],
            "l": g.extent[0], "w": g.extent[1], "h": g.extent[2], "yaw": g.yaw,
        }, g.sequence)
        for g in annotations
    ))


def _track(rec: dict) -> TrackRow:
    x, y, z, l, w, h, yaw = (_num(rec, k) for k in _BOX)
    score = _num(rec, "score")
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"score {score} outside [0, 1]")
    active = rec["active"]
    if not isinstance(active, bool):
        raise ValueError("field 'active' must be a boolean")
    return TrackRow(_frame(rec), _int(rec, "track_id"), _str(rec, "class"),
                    (x, y, z), (l, w, h), yaw, score, active, _str(rec, "sequence", ""))


def read_tracks(path) -> list[TrackRow]:
    return _read_records(path, TRACKS, _track)


def write_tracks(path, rows: Iterable[TrackRow]) -> None:
    _write_records(path, TRACKS, (
        _with_sequence({
            "frame": r.frame_index, "track_id": r.track_id, "class": r.class_label,
            "x": r.center[0], "y": r.center[1], "z": r.center[2],
            "l": r.extent[0], "w": r.extent[1], "h": r.extent[2], "yaw": r.yaw,
            "score": r.score, "active": r.active,
        }, r.sequence)
        for r in rows
    ))


# ---------------------------------------------------------------------------
# TOML
# ---------------------------------------------------------------------------


def read_toml(path) -> dict:
    path = Path(path)
    with _open_read(path) as fh:
        text = fh.read()
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None) or 1
        raise ParseError(str(path), line, f"invalid TOML ({exc})") from None


def write_toml(path, data: Mapping) -> None:
    _write_text(Path(path), tomli_w.dumps(dict(data)))


def read_tracker_config(path) -> TrackerConfig:
    data = read_toml(path)
    try:
        return TrackerConfig.from_dict(data)
    except ValidationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def write_tracker_config(path, cfg: TrackerConfig) -> None:
    write_toml(path, cfg.to_dict())
