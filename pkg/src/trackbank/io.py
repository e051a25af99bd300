"""File formats: JSONL detection streams, trajectory JSON, ground-truth JSON.

Writers are deterministic byte-for-byte: keys are emitted in a fixed order
and every float is rounded to 9 significant digits before serialization, so
write -> parse -> write round-trips are byte-identical.
"""

from __future__ import annotations

import json
import math
from typing import Any, Iterable

import numpy as np

from .geometry import BBox, BinaryMask, MaskFormatError
from .simulator import GroundTruth, GroundTruthFrame, GroundTruthObject
from .template_bank import Template, TemplateBank
from .tracker import Detection, Trajectory

__all__ = [
    "DetectionStreamError",
    "TrajectoryFormatError",
    "GroundTruthFormatError",
    "TRAJECTORY_FORMAT_VERSION",
    "GROUND_TRUTH_FORMAT_VERSION",
    "parse_detection_stream",
    "write_detection_stream",
    "frames_to_wire",
    "frames_from_wire",
    "write_trajectories",
    "parse_trajectories",
    "trajectories_to_wire",
    "trajectories_from_wire",
    "write_ground_truth",
    "parse_ground_truth",
    "ground_truth_to_wire",
    "ground_truth_from_wire",
]

TRAJECTORY_FORMAT_VERSION = 1
GROUND_TRUTH_FORMAT_VERSION = 1


class DetectionStreamError(ValueError):
    """Malformed detection stream; carries the offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class TrajectoryFormatError(ValueError):
    """Malformed trajectory document; carries a JSON path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.json_path = path


class GroundTruthFormatError(ValueError):
    """Malformed ground-truth document; carries a JSON path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.json_path = path


def _round9(x: float) -> float:
    # 9 significant digits; repr of the rounded double is stable
    return float(f"{float(x):.9g}")


def _round9_list(values: Iterable[float]) -> list[float]:
    return [_round9(v) for v in values]


def _dump(obj: Any) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=False)


# --------------------------------------------------------------------------
# detection streams (JSONL, one frame record per line)


def _detection_to_obj(det: Detection) -> dict:
    return {
        "bbox": _round9_list(det.bbox.to_list()),
        "conf": _round9(det.conf),
        "embedding": _round9_list(det.embedding.tolist()),
        "mask": det.mask.to_text() if det.mask is not None else None,
    }


def _detection_from_obj(obj: Any, line: int) -> Detection:
    if not isinstance(obj, dict):
        raise DetectionStreamError(line, "detection must be an object")
    for key in ("bbox", "conf", "embedding"):
        if key not in obj:
            raise DetectionStreamError(line, f"detection missing {key!r}")
    unknown = set(obj) - {"bbox", "conf", "embedding", "mask"}
    if unknown:
        raise DetectionStreamError(line, f"unknown detection fields: {sorted(unknown)}")
    bbox = obj["bbox"]
    if not isinstance(bbox, list) or len(bbox) != 4 or not all(
        isinstance(v, (int, float)) and math.isfinite(v) for v in bbox
    ):
        raise DetectionStreamError(line, f"bbox must be 4 finite numbers, got {bbox!r}")
    if bbox[2] <= 0 or bbox[3] <= 0:
        raise DetectionStreamError(line, f"bbox size must be positive, got {bbox!r}")
    conf = obj["conf"]
    if not isinstance(conf, (int, float)) or not 0.0 <= conf <= 1.0:
        raise DetectionStreamError(line, f"conf out of range [0, 1]: {conf!r}")
    embedding = obj["embedding"]
    if (
        not isinstance(embedding, list)
        or not embedding
        or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in embedding)
    ):
        raise DetectionStreamError(line, "embedding must be a non-empty list of finite numbers")
    mask_text = obj.get("mask")
    mask = None
    if mask_text is not None:
        if not isinstance(mask_text, str):
            raise DetectionStreamError(line, "mask must be an RLE string or null")
        try:
            mask = BinaryMask.from_text(mask_text)
        except MaskFormatError as exc:
            raise DetectionStreamError(line, f"bad mask: {exc}") from exc
    return Detection(
        bbox=BBox.from_list(bbox),
        conf=float(conf),
        embedding=np.asarray(embedding, dtype=np.float64),
        mask=mask,
    )


def frames_to_wire(frames: list[tuple[int, list[Detection]]]) -> list[dict]:
    return [
        {"frame": frame, "detections": [_detection_to_obj(d) for d in dets]}
        for frame, dets in frames
    ]


def frames_from_wire(records: list, first_line: int = 1) -> list[tuple[int, list[Detection]]]:
    """Validate frame records; line numbers are 1-based for error reporting."""
    frames: list[tuple[int, list[Detection]]] = []
    last_frame = None
    dim = None
    for offset, record in enumerate(records):
        line = first_line + offset
        if not isinstance(record, dict):
            raise DetectionStreamError(line, "frame record must be an object")
        unknown = set(record) - {"frame", "detections"}
        if unknown:
            raise DetectionStreamError(line, f"unknown frame fields: {sorted(unknown)}")
        frame = record.get("frame")
        if not isinstance(frame, int) or isinstance(frame, bool) or frame < 0:
            raise DetectionStreamError(line, f"frame must be a non-negative integer, got {frame!r}")
        if last_frame is not None and frame <= last_frame:
            raise DetectionStreamError(
                line, f"frames must be strictly increasing ({frame} after {last_frame})"
            )
        last_frame = frame
        dets_obj = record.get("detections")
        if not isinstance(dets_obj, list):
            raise DetectionStreamError(line, "detections must be a list")
        dets = [_detection_from_obj(d, line) for d in dets_obj]
        for d in dets:
            if dim is None:
                dim = d.embedding.shape[0]
            elif d.embedding.shape[0] != dim:
                raise DetectionStreamError(
                    line,
                    f"embedding dim {d.embedding.shape[0]} differs from stream dim {dim}",
                )
        frames.append((frame, dets))
    return frames


def write_detection_stream(frames: list[tuple[int, list[Detection]]], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in frames_to_wire(frames):
            fh.write(_dump(record))
            fh.write("\n")


def parse_detection_stream(path) -> list[tuple[int, list[Detection]]]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                records.append((line_no, json.loads(raw)))
            except json.JSONDecodeError as exc:
                raise DetectionStreamError(line_no, f"malformed JSON: {exc.msg}") from exc
    frames: list[tuple[int, list[Detection]]] = []
    last_frame = None
    dim = None
    for line_no, record in records:
        parsed = frames_from_wire([record], first_line=line_no)
        frame, dets = parsed[0]
        if last_frame is not None and frame <= last_frame:
            raise DetectionStreamError(
                line_no, f"frames must be strictly increasing ({frame} after {last_frame})"
            )
        last_frame = frame
        for d in dets:
            if dim is None:
                dim = d.embedding.shape[0]
            elif d.embedding.shape[0] != dim:
                raise DetectionStreamError(
                    line_no,
                    f"embedding dim {d.embedding.shape[0]} differs from stream dim {dim}",
                )
        frames.append((frame, dets))
    return frames


# --------------------------------------------------------------------------
# trajectories (single JSON document)


def _bank_to_obj(bank: TemplateBank) -> dict:
    return {
        "capacity": bank.capacity,
        "templates": [
            {
                "embedding": _round9_list(t.embedding.tolist()),
                "born_frame": t.born_frame,
                "use_count": t.use_count,
            }
            for t in bank.templates
        ],
    }


def _bank_from_obj(obj: Any, path: str) -> TemplateBank:
    if not isinstance(obj, dict):
        raise TrajectoryFormatError(path, "bank must be an object")
    capacity = obj.get("capacity")
    if not isinstance(capacity, int) or capacity < 1:
        raise TrajectoryFormatError(f"{path}.capacity", f"must be a positive integer, got {capacity!r}")
    templates_obj = obj.get("templates")
    if not isinstance(templates_obj, list) or not templates_obj:
        raise TrajectoryFormatError(f"{path}.templates", "must be a non-empty list")
    templates = []
    for k, t in enumerate(templates_obj):
        tpath = f"{path}.templates[{k}]"
        if not isinstance(t, dict):
            raise TrajectoryFormatError(tpath, "template must be an object")
        emb = t.get("embedding")
        if not isinstance(emb, list) or not emb:
            raise TrajectoryFormatError(f"{tpath}.embedding", "must be a non-empty list")
        born = t.get("born_frame")
        count = t.get("use_count")
        if not isinstance(born, int) or born < 0:
            raise TrajectoryFormatError(f"{tpath}.born_frame", f"must be a non-negative int, got {born!r}")
        if not isinstance(count, int) or count < 0:
            raise TrajectoryFormatError(f"{tpath}.use_count", f"must be a non-negative int, got {count!r}")
        templates.append(
            Template(
                embedding=np.asarray(emb, dtype=np.float64),
                born_frame=born,
                use_count=count,
            )
        )
    try:
        return TemplateBank(templates=tuple(templates), capacity=capacity)
    except ValueError as exc:
        raise TrajectoryFormatError(path, str(exc)) from exc


def trajectories_to_wire(
    trajectories: list[Trajectory], banks: dict[int, TemplateBank]
) -> dict:
    targets = []
    for traj in trajectories:
        entries = []
        for frame in traj.frames():
            bbox, mask, weight = traj.entries[frame]
            entries.append(
                {
                    "frame": frame,
                    "bbox": _round9_list(bbox.to_list()),
                    "mask": mask.to_text() if mask is not None else None,
                    "weight": _round9(weight),
                }
            )
        targets.append(
            {
                "id": traj.target_id,
                "entries": entries,
                "bank": _bank_to_obj(banks[traj.target_id]),
            }
        )
    return {"version": TRAJECTORY_FORMAT_VERSION, "targets": targets}


def trajectories_from_wire(doc: Any) -> tuple[list[Trajectory], dict[int, TemplateBank]]:
    if not isinstance(doc, dict):
        raise TrajectoryFormatError("$", "document must be an object")
    version = doc.get("version")
    if version != TRAJECTORY_FORMAT_VERSION:
        raise TrajectoryFormatError(
            "$.version",
            f"unsupported format version {version!r}, expected {TRAJECTORY_FORMAT_VERSION}",
        )
    targets_obj = doc.get("targets")
    if not isinstance(targets_obj, list):
        raise TrajectoryFormatError("$.targets", "must be a list")
    trajectories = []
    banks: dict[int, TemplateBank] = {}
    for idx, target in enumerate(targets_obj):
        path = f"$.targets[{idx}]"
        if not isinstance(target, dict):
            raise TrajectoryFormatError(path, "target must be an object")
        tid = target.get("id")
        if not isinstance(tid, int) or tid < 0:
            raise TrajectoryFormatError(f"{path}.id", f"must be a non-negative int, got {tid!r}")
        if tid in banks:
            raise TrajectoryFormatError(f"{path}.id", f"duplicate target id {tid}")
        entries_obj = target.get("entries")
        if not isinstance(entries_obj, list):
            raise TrajectoryFormatError(f"{path}.entries", "must be a list")
        traj = Trajectory(target_id=tid)
        last_frame = None
        for k, entry in enumerate(entries_obj):
            epath = f"{path}.entries[{k}]"
            if not isinstance(entry, dict):
                raise TrajectoryFormatError(epath, "entry must be an object")
            frame = entry.get("frame")
            if not isinstance(frame, int) or frame < 0:
                raise TrajectoryFormatError(f"{epath}.frame", f"must be a non-negative int, got {frame!r}")
            if last_frame is not None and frame <= last_frame:
                raise TrajectoryFormatError(
                    f"{epath}.frame", f"frames must be strictly increasing ({frame} after {last_frame})"
                )
            last_frame = frame
            bbox = entry.get("bbox")
            if not isinstance(bbox, list) or len(bbox) != 4:
                raise TrajectoryFormatError(f"{epath}.bbox", f"must be 4 numbers, got {bbox!r}")
            try:
                box = BBox.from_list(bbox)
            except (TypeError, ValueError) as exc:
                raise TrajectoryFormatError(f"{epath}.bbox", str(exc)) from exc
            weight = entry.get("weight")
            if not isinstance(weight, (int, float)) or not math.isfinite(weight):
                raise TrajectoryFormatError(f"{epath}.weight", f"must be a finite number, got {weight!r}")
            mask_text = entry.get("mask")
            mask = None
            if mask_text is not None:
                if not isinstance(mask_text, str):
                    raise TrajectoryFormatError(f"{epath}.mask", "must be an RLE string or null")
                try:
                    mask = BinaryMask.from_text(mask_text)
                except MaskFormatError as exc:
                    raise TrajectoryFormatError(f"{epath}.mask", str(exc)) from exc
            traj.entries[frame] = (box, mask, float(weight))
        banks[tid] = _bank_from_obj(target.get("bank"), f"{path}.bank")
        trajectories.append(traj)
    return trajectories, banks


def write_trajectories(
    trajectories: list[Trajectory], banks: dict[int, TemplateBank], path
) -> None:
    doc = trajectories_to_wire(trajectories, banks)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dump(doc))
        fh.write("\n")


def parse_trajectories(path) -> tuple[list[Trajectory], dict[int, TemplateBank]]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TrajectoryFormatError("$", f"malformed JSON: {exc.msg}") from exc
    return trajectories_from_wire(doc)


# --------------------------------------------------------------------------
# ground truth (single JSON document)


def ground_truth_to_wire(gt: GroundTruth) -> dict:
    return {
        "version": GROUND_TRUTH_FORMAT_VERSION,
        "scene": [gt.scene[0], gt.scene[1]],
        "num_frames": gt.num_frames,
        "objects": [
            {
                "id": obj.object_id,
                "frames": [
                    {
                        "bbox": _round9_list(f.bbox.to_list()),
                        "visible": f.visible,
                        "embedding": _round9_list(f.embedding.tolist()),
                    }
                    for f in obj.frames
                ],
            }
            for obj in gt.objects
        ],
    }


def ground_truth_from_wire(doc: Any) -> GroundTruth:
    if not isinstance(doc, dict):
        raise GroundTruthFormatError("$", "document must be an object")
    version = doc.get("version")
    if version != GROUND_TRUTH_FORMAT_VERSION:
        raise GroundTruthFormatError(
            "$.version",
            f"unsupported format version {version!r}, expected {GROUND_TRUTH_FORMAT_VERSION}",
        )
    scene = doc.get("scene")
    if (
        not isinstance(scene, list)
        or len(scene) != 2
        or not all(isinstance(v, int) and v >= 1 for v in scene)
    ):
        raise GroundTruthFormatError("$.scene", f"must be [width, height] positive ints, got {scene!r}")
    num_frames = doc.get("num_frames")
    if not isinstance(num_frames, int) or num_frames < 1:
        raise GroundTruthFormatError("$.num_frames", f"must be a positive int, got {num_frames!r}")
    objects_obj = doc.get("objects")
    if not isinstance(objects_obj, list) or not objects_obj:
        raise GroundTruthFormatError("$.objects", "must be a non-empty list")
    objects = []
    for idx, obj in enumerate(objects_obj):
        path = f"$.objects[{idx}]"
        if not isinstance(obj, dict):
            raise GroundTruthFormatError(path, "object must be an object")
        oid = obj.get("id")
        if oid != idx:
            raise GroundTruthFormatError(f"{path}.id", f"ids must be 0..N-1 in order, got {oid!r}")
        frames_obj = obj.get("frames")
        if not isinstance(frames_obj, list) or len(frames_obj) != num_frames:
            raise GroundTruthFormatError(
                f"{path}.frames", f"must list exactly {num_frames} frames"
            )
        frames = []
        for k, f in enumerate(frames_obj):
            fpath = f"{path}.frames[{k}]"
            if not isinstance(f, dict):
                raise GroundTruthFormatError(fpath, "frame must be an object")
            bbox = f.get("bbox")
            if not isinstance(bbox, list) or len(bbox) != 4:
                raise GroundTruthFormatError(f"{fpath}.bbox", f"must be 4 numbers, got {bbox!r}")
            try:
                box = BBox.from_list(bbox)
            except (TypeError, ValueError) as exc:
                raise GroundTruthFormatError(f"{fpath}.bbox", str(exc)) from exc
            visible = f.get("visible")
            if not isinstance(visible, bool):
                raise GroundTruthFormatError(f"{fpath}.visible", f"must be a boolean, got {visible!r}")
            emb = f.get("embedding")
            if not isinstance(emb, list) or not emb:
                raise GroundTruthFormatError(f"{fpath}.embedding", "must be a non-empty list")
            frames.append(
                GroundTruthFrame(
                    bbox=box,
                    visible=visible,
                    embedding=np.asarray(emb, dtype=np.float64),
                )
            )
        objects.append(GroundTruthObject(object_id=idx, frames=tuple(frames)))
    return GroundTruth(scene=(scene[0], scene[1]), num_frames=num_frames, objects=tuple(objects))


def write_ground_truth(gt: GroundTruth, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dump(ground_truth_to_wire(gt)))
        fh.write("\n")


def parse_ground_truth(path) -> GroundTruth:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GroundTruthFormatError("$", f"malformed JSON: {exc.msg}") from exc
    return ground_truth_from_wire(doc)
