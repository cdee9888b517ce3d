"""File formats: newline-delimited JSON detections and CSV track tables.

Detection files carry one frame per line as a JSON object; track files (and
ground-truth files, which share the schema) are CSV with one box per row.
All floats are serialized with 9 significant digits; reading a file back and
rewriting it reproduces it byte for byte.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .errors import DataFormatError, ValidationError
from .evaluation import FrameObject, GroundTruthFrame
from .types import Box, Box2D, Box3D, Camera, Detection, Mode, ObjectClass


def qfloat(x: float) -> float:
    """Quantize to 9 significant digits (the on-disk float precision)."""
    return float(format(float(x), ".9g"))


# ---------------------------------------------------------------------------
# Detection files (NDJSON, one frame per line)


@dataclass
class DetectionFrame:
    """All detections of one (sequence, camera, frame)."""

    sequence_id: str
    frame: int
    camera: Camera | None
    detections: list[Detection]


_DET_KEYS = {"class", "box2d", "box3d", "score", "embedding", "src_gt"}
_FRAME_KEYS = {"sequence_id", "frame", "camera", "detections"}


def _det_to_json(det: Detection) -> dict[str, Any]:
    out: dict[str, Any] = {"class": det.class_label.value}
    if isinstance(det.box, Box2D):
        b = det.box
        out["box2d"] = [qfloat(b.cx), qfloat(b.cy), qfloat(b.w), qfloat(b.h)]
    else:
        b = det.box
        out["box3d"] = [
            qfloat(b.cx), qfloat(b.cy), qfloat(b.cz),
            qfloat(b.h), qfloat(b.w), qfloat(b.l), qfloat(b.theta),
        ]
    out["score"] = qfloat(det.score)
    out["embedding"] = (
        None if det.embedding is None else [qfloat(v) for v in det.embedding]
    )
    out["src_gt"] = det.src_gt
    return out


def write_detections(path: str | Path, frames: Iterable[DetectionFrame]) -> None:
    last_frame: dict[tuple[str, Camera | None], int] = {}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for fr in frames:
            key = (fr.sequence_id, fr.camera)
            if key in last_frame and fr.frame <= last_frame[key]:
                raise ValidationError(
                    f"frames must be strictly increasing per sequence/camera; "
                    f"got frame {fr.frame} after {last_frame[key]} in "
                    f"{fr.sequence_id!r}"
                )
            last_frame[key] = fr.frame
            record = {
                "sequence_id": fr.sequence_id,
                "frame": fr.frame,
                "camera": None if fr.camera is None else fr.camera.value,
                "detections": [_det_to_json(d) for d in fr.detections],
            }
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")


def _parse_detection(entry: Any, camera: Camera | None, line: int) -> Detection:
    if not isinstance(entry, dict):
        raise DataFormatError("detection entry must be an object", line)
    for key in entry:
        if key not in _DET_KEYS:
            raise DataFormatError(f"unknown detection key {key!r}", line)
    if "class" not in entry or "score" not in entry:
        raise DataFormatError("detection needs 'class' and 'score'", line)
    has2d, has3d = "box2d" in entry, "box3d" in entry
    if has2d == has3d:
        raise DataFormatError("detection needs exactly one of box2d/box3d", line)
    try:
        if has2d:
            vals = entry["box2d"]
            if not isinstance(vals, list) or len(vals) != 4:
                raise DataFormatError("box2d must be [cx, cy, w, h]", line)
            box: Box = Box2D(*[float(v) for v in vals])
        else:
            vals = entry["box3d"]
            if not isinstance(vals, list) or len(vals) != 7:
                raise DataFormatError("box3d must be [cx, cy, cz, h, w, l, theta]", line)
            box = Box3D(*[float(v) for v in vals])
        embedding = entry.get("embedding")
        if embedding is not None:
            if not isinstance(embedding, list):
                raise DataFormatError("embedding must be a list or null", line)
            embedding = np.asarray(embedding, dtype=np.float64)
        src_gt = entry.get("src_gt")
        if src_gt is not None and not isinstance(src_gt, int):
            raise DataFormatError("src_gt must be an integer or null", line)
        return Detection(
            box=box,
            score=float(entry["score"]),
            class_label=entry["class"],
            camera_id=camera,
            embedding=embedding,
            src_gt=src_gt,
        )
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"bad detection: {exc}", line) from None


def read_detections(path: str | Path) -> list[DetectionFrame]:
    frames: list[DetectionFrame] = []
    last_frame: dict[tuple[str, Camera | None], int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"invalid JSON: {exc.msg}", lineno) from None
            if not isinstance(record, dict):
                raise DataFormatError("each line must be a JSON object", lineno)
            for key in record:
                if key not in _FRAME_KEYS:
                    raise DataFormatError(f"unknown key {key!r}", lineno)
            for key in ("sequence_id", "frame", "detections"):
                if key not in record:
                    raise DataFormatError(f"missing key {key!r}", lineno)
            seq = record["sequence_id"]
            if not isinstance(seq, str):
                raise DataFormatError("sequence_id must be a string", lineno)
            frame = record["frame"]
            if isinstance(frame, bool) or not isinstance(frame, int):
                raise DataFormatError("frame must be an integer", lineno)
            cam_raw = record.get("camera")
            camera: Camera | None = None
            if cam_raw is not None:
                try:
                    camera = Camera(cam_raw)
                except ValueError:
                    raise DataFormatError(f"unknown camera {cam_raw!r}", lineno) from None
            key = (seq, camera)
            if key in last_frame and frame <= last_frame[key]:
                raise DataFormatError(
                    f"frame {frame} not increasing within sequence {seq!r}", lineno
                )
            last_frame[key] = frame
            dets_raw = record["detections"]
            if not isinstance(dets_raw, list):
                raise DataFormatError("detections must be a list", lineno)
            dets = [_parse_detection(d, camera, lineno) for d in dets_raw]
            frames.append(DetectionFrame(seq, frame, camera, dets))
    return frames


# ---------------------------------------------------------------------------
# Track files (CSV; also used for ground truth)


@dataclass(frozen=True)
class TrackRow:
    """One output box of one track in one frame."""

    sequence_id: str
    frame: int
    track_id: int
    class_label: ObjectClass
    box: Box
    score: float


_HEADER_2D = ["sequence_id", "frame", "track_id", "class", "cx", "cy", "w", "h", "score"]
_HEADER_3D = [
    "sequence_id", "frame", "track_id", "class",
    "cx", "cy", "cz", "h", "w", "l", "theta", "score",
]


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def write_tracks(path: str | Path, rows: Iterable[TrackRow], mode: Mode | str) -> None:
    mode = Mode(mode)
    header = _HEADER_2D if mode is Mode.D2 else _HEADER_3D
    want = Box2D if mode is Mode.D2 else Box3D
    seen: set[tuple[str, int, int]] = set()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            if not isinstance(row.box, want):
                raise ValidationError(
                    f"track {row.track_id} frame {row.frame}: box kind does not "
                    f"match {mode.value} output"
                )
            key = (row.sequence_id, row.frame, row.track_id)
            if key in seen:
                raise ValidationError(
                    f"duplicate (sequence, frame, track_id) row: {key}"
                )
            seen.add(key)
            if mode is Mode.D2:
                b2 = row.box
                box_fields = [_fmt(b2.cx), _fmt(b2.cy), _fmt(b2.w), _fmt(b2.h)]
            else:
                b3 = row.box
                box_fields = [
                    _fmt(b3.cx), _fmt(b3.cy), _fmt(b3.cz),
                    _fmt(b3.h), _fmt(b3.w), _fmt(b3.l), _fmt(b3.theta),
                ]
            writer.writerow(
                [row.sequence_id, str(row.frame), str(row.track_id),
                 row.class_label.value, *box_fields, _fmt(row.score)]
            )


def read_tracks(path: str | Path) -> list[TrackRow]:
    rows: list[TrackRow] = []
    seen: set[tuple[str, int, int]] = set()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return rows
        if header == _HEADER_2D:
            mode = Mode.D2
        elif header == _HEADER_3D:
            mode = Mode.D3
        else:
            raise DataFormatError(f"unrecognized track file header: {header}", 1)
        n_cols = len(header)
        for record in reader:
            lineno = reader.line_num
            if not record:
                continue
            if len(record) != n_cols:
                raise DataFormatError(
                    f"expected {n_cols} columns, got {len(record)}", lineno
                )
            try:
                seq = record[0]
                frame = int(record[1])
                track_id = int(record[2])
                label = ObjectClass(record[3])
                values = [float(v) for v in record[4:-1]]
                score = float(record[-1])
                box: Box = (
                    Box2D(*values) if mode is Mode.D2 else Box3D(*values)
                )
            except (TypeError, ValueError) as exc:
                raise DataFormatError(f"bad track row: {exc}", lineno) from None
            key = (seq, frame, track_id)
            if key in seen:
                raise DataFormatError(
                    f"duplicate (sequence, frame, track_id) row: {key}", lineno
                )
            seen.add(key)
            rows.append(TrackRow(seq, frame, track_id, label, box, score))
    return rows


def rows_to_eval_frames(rows: Iterable[TrackRow]) -> dict[str, list[GroundTruthFrame]]:
    """Group track rows into per-sequence frame lists for evaluation."""
    by_seq: dict[str, dict[int, list[FrameObject]]] = {}
    for row in rows:
        frames = by_seq.setdefault(row.sequence_id, {})
        frames.setdefault(row.frame, []).append(
            FrameObject(row.track_id, row.box, row.class_label)
        )
    return {
        seq: [GroundTruthFrame(frame, tuple(objs)) for frame, objs in sorted(frames.items())]
        for seq, frames in by_seq.items()
    }


def gt_to_rows(
    sequence_id: str, gt_frames: Iterable[GroundTruthFrame]
) -> list[TrackRow]:
    """Represent simulated ground truth in the track-file schema (score 1)."""
    return [
        TrackRow(sequence_id, fr.frame, obj.obj_id, obj.class_label, obj.box, 1.0)
        for fr in gt_frames
        for obj in fr.objects
    ]
