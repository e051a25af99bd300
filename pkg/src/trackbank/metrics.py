"""Evaluation of tracker output against simulator ground truth.

Region similarity J is mask IoU; boundary accuracy F is a boundary-pixel
F-measure with a Chebyshev pixel tolerance. Identity switches count the
events where a target's best-IoU ground-truth attribution changes between
two consecutive attributed frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import BinaryMask, MaskFormatError, iou, mask_iou, rle_decode
from .simulator import GroundTruth
from .tracker import Trajectory

__all__ = ["EvalReport", "region_j", "boundary_f", "id_switches", "evaluate"]


@dataclass(frozen=True)
class EvalReport:
    j_mean: float
    f_mean: float
    jf_mean: float
    id_switches: int
    track_recall: float
    # one row per (object, frame >= 1): (object, frame, J, F, attributed target or -1)
    per_frame: tuple[tuple[int, int, float, float, int], ...]

    def to_dict(self) -> dict:
        return {
            "j_mean": self.j_mean,
            "f_mean": self.f_mean,
            "jf_mean": self.jf_mean,
            "id_switches": self.id_switches,
            "track_recall": self.track_recall,
        }

    def per_frame_csv(self) -> str:
        lines = ["object,frame,j,f,attribution"]
        for obj, frame, j, f, attr in self.per_frame:
            lines.append(f"{obj},{frame},{j:.9g},{f:.9g},{attr}")
        return "\n".join(lines) + "\n"


def region_j(pred: BinaryMask, gt: BinaryMask) -> float:
    """Mask IoU; 1.0 when both masks are empty."""
    return mask_iou(pred, gt)


def _boundary(mask: np.ndarray) -> np.ndarray:
    """Foreground pixels with a 4-neighbor background pixel or on the edge."""
    if not mask.any():
        return np.zeros_like(mask, dtype=bool)
    padded = np.pad(mask, 1, constant_values=False)
    interior = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return mask & ~interior


def boundary_f(pred: BinaryMask, gt: BinaryMask, tol: int = 1) -> float:
    """Boundary F-measure with Chebyshev pixel tolerance `tol`."""
    if tol < 0:
        raise ValueError(f"tolerance must be >= 0, got {tol}")
    if pred.width != gt.width or pred.height != gt.height:
        raise MaskFormatError(
            f"mask dims differ: {pred.width}x{pred.height} vs {gt.width}x{gt.height}"
        )
    pb = _boundary(rle_decode(pred))
    gb = _boundary(rle_decode(gt))
    if not pb.any() and not gb.any():
        return 1.0
    if not pb.any() or not gb.any():
        return 0.0
    size = 2 * tol + 1
    gb_near = ndimage.maximum_filter(gb, size=size, mode="constant")
    pb_near = ndimage.maximum_filter(pb, size=size, mode="constant")
    precision = float(np.count_nonzero(pb & gb_near)) / float(np.count_nonzero(pb))
    recall = float(np.count_nonzero(gb & pb_near)) / float(np.count_nonzero(gb))
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _attributions(
    trajectories: list[Trajectory], gt: GroundTruth, iou_floor: float
) -> dict[int, list[tuple[int, int]]]:
    """Per target: (frame, attributed GT object) for frames 1..T-1."""
    out: dict[int, list[tuple[int, int]]] = {}
    for traj in trajectories:
        rows: list[tuple[int, int]] = []
        for frame in traj.frames():
            if frame == 0 or frame >= gt.num_frames:
                continue
            box = traj.entries[frame][0]
            best_obj = -1
            best_iou = 0.0
            for obj in gt.objects:
                gtf = obj.frames[frame]
                if not gtf.visible:
                    continue
                value = iou(box, gtf.bbox)
                if value > best_iou:
                    best_iou = value
                    best_obj = obj.object_id
            if best_obj >= 0 and best_iou >= iou_floor:
                rows.append((frame, best_obj))
        out[traj.target_id] = rows
    return out


def id_switches(
    trajectories: list[Trajectory], gt: GroundTruth, iou_floor: float = 0.5
) -> int:
    """Count attribution changes between consecutive attributed frames.

    Gaps (frames without an attribution) do not count; re-attachment to the
    same object after a gap is not a switch.
    """
    switches = 0
    for rows in _attributions(trajectories, gt, iou_floor).values():
        for (_, prev_obj), (_, cur_obj) in zip(rows, rows[1:]):
            if cur_obj != prev_obj:
                switches += 1
    return switches


def evaluate(
    trajectories: list[Trajectory],
    gt: GroundTruth,
    boundary_tolerance: int = 1,
    iou_floor: float = 0.5,
) -> EvalReport:
    """Score frames 1..T-1; frame 0 is the given annotation.

    Target ids correspond to ground-truth object indices (the identity set is
    fixed at frame 0). An invisible object with no emitted entry scores
    J = F = 1 for that frame.
    """
    by_id = {t.target_id: t for t in trajectories}
    missing = [obj.object_id for obj in gt.objects if obj.object_id not in by_id]
    if missing:
        raise ValueError(f"no trajectory for ground-truth objects {missing}")
    for traj in trajectories:
        if any(f >= gt.num_frames for f in traj.entries):
            raise ValueError(
                f"trajectory {traj.target_id} has frames beyond ground truth "
                f"range 0..{gt.num_frames - 1}"
            )

    attributions = _attributions(trajectories, gt, iou_floor)
    attr_lookup = {
        (tid, frame): obj for tid, rows in attributions.items() for frame, obj in rows
    }

    per_frame: list[tuple[int, int, float, float, int]] = []
    j_per_object: list[float] = []
    f_per_object: list[float] = []
    visible_total = 0
    visible_recalled = 0
    empty = None
    for obj in gt.objects:
        traj = by_id[obj.object_id]
        j_values: list[float] = []
        f_values: list[float] = []
        for frame in range(1, gt.num_frames):
            gtf = obj.frames[frame]
            entry = traj.entries.get(frame)
            if gtf.visible:
                gt_mask = gt.mask_for(obj.object_id, frame)
                visible_total += 1
                if entry is not None and iou(entry[0], gtf.bbox) >= 0.5:
                    visible_recalled += 1
            else:
                gt_mask = None
            if entry is None:
                if gt_mask is None:
                    j = f = 1.0  # correct absence
                else:
                    j = f = 0.0
            else:
                pred_mask = entry[1]
                if pred_mask is None:
                    raise ValueError(
                        f"trajectory {traj.target_id} frame {frame} has no mask; "
                        "J/F need masks"
                    )
                if gt_mask is None:
                    # object absent but something was emitted
                    if empty is None:
                        empty = _empty_like(pred_mask)
                    j = mask_iou(pred_mask, empty)
                    f = boundary_f(pred_mask, empty, boundary_tolerance)
                else:
                    j = mask_iou(pred_mask, gt_mask)
                    f = boundary_f(pred_mask, gt_mask, boundary_tolerance)
            attr = attr_lookup.get((obj.object_id, frame), -1)
            per_frame.append((obj.object_id, frame, j, f, attr))
            j_values.append(j)
            f_values.append(f)
        j_per_object.append(float(np.mean(j_values)) if j_values else 1.0)
        f_per_object.append(float(np.mean(f_values)) if f_values else 1.0)

    j_mean = float(np.mean(j_per_object))
    f_mean = float(np.mean(f_per_object))
    return EvalReport(
        j_mean=j_mean,
        f_mean=f_mean,
        jf_mean=(j_mean + f_mean) / 2.0,
        id_switches=id_switches(trajectories, gt, iou_floor),
        track_recall=(visible_recalled / visible_total) if visible_total else 1.0,
        per_frame=tuple(per_frame),
    )


def _empty_like(mask: BinaryMask) -> BinaryMask:
    return BinaryMask(
        width=mask.width, height=mask.height, runs=(mask.width * mask.height,)
    )
