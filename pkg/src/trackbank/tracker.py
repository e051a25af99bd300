"""Online frame-by-frame association loop.

The identity set is fixed by the first-frame ground truth: no track births,
no terminations. Each step filters detections by confidence, builds the
combined location+appearance cost matrix, solves the assignment, accepts
pairs above the match-weight floor, and updates trajectories and template
banks according to the configured mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assignment import solve_max_assignment
from .config import RunConfig
from .geometry import BBox, BinaryMask, MaskFormatError, rle_decode
from .matching import as_embedding, build_cost_matrix
from .template_bank import (
    TemplateBank,
    dttm_update,
    init_bank,
    moving_average_update,
)

__all__ = ["Detection", "TrackedTarget", "Trajectory", "FrameResult", "Tracker", "merge_masks"]


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    conf: float
    embedding: np.ndarray
    mask: BinaryMask | None = None

    def __post_init__(self):
        if not 0.0 <= self.conf <= 1.0:
            raise ValueError(f"conf must be in [0, 1], got {self.conf}")
        object.__setattr__(self, "embedding", as_embedding(self.embedding))


@dataclass
class TrackedTarget:
    id: int
    bank: TemplateBank
    last_box: BBox
    last_seen_frame: int


@dataclass
class Trajectory:
    """Per-target entries keyed by frame: (box, optional mask, accepted weight)."""

    target_id: int
    entries: dict[int, tuple[BBox, BinaryMask | None, float]] = field(default_factory=dict)

    def frames(self) -> list[int]:
        return sorted(self.entries)


@dataclass(frozen=True)
class FrameResult:
    frame: int
    matches: tuple[tuple[int, int, float], ...]  # (target_id, detection index, weight)
    unmatched_targets: tuple[int, ...]
    unmatched_detections: tuple[int, ...]
    label_map: np.ndarray | None = None


def merge_masks(
    entries: list[tuple[int, float, BinaryMask]], width: int, height: int
) -> np.ndarray:
    """Merge per-target masks into one label map by confidence ranking.

    ``entries`` holds (target_id, conf, mask). Background is 0, targets are
    labeled id+1. Overlap pixels go to the higher confidence; equal
    confidences go to the lower target id.
    """
    label_map = np.zeros((height, width), dtype=np.int64)
    best_conf = np.full((height, width), -np.inf)
    # lower ids first so that later equal-confidence entries do not overwrite
    for target_id, conf, mask in sorted(entries, key=lambda e: e[0]):
        if mask.width != width or mask.height != height:
            raise MaskFormatError(
                f"mask dims {mask.width}x{mask.height} do not match "
                f"label map {width}x{height}"
            )
        fg = rle_decode(mask)
        take = fg & (conf > best_conf)
        label_map[take] = target_id + 1
        best_conf[take] = conf
    return label_map


class Tracker:
    """One instance per sequence; strictly sequential online stepping."""

    def __init__(self, targets: list[TrackedTarget], config: RunConfig):
        self.config = config
        self.targets = targets
        self.trajectories = {t.id: Trajectory(target_id=t.id) for t in targets}
        self.last_frame = 0
        self._ma_momentum = config.thresholds.momentum

    @classmethod
    def from_first_frame(cls, ground_truth: list[Detection], config: RunConfig) -> "Tracker":
        """Initialize targets 0..N-1 from the frame-0 annotations, in order."""
        if not ground_truth:
            raise ValueError("first-frame ground truth must contain at least one object")
        dims = {d.embedding.shape[0] for d in ground_truth}
        if len(dims) > 1:
            raise ValueError(f"mixed embedding dims in first frame: {sorted(dims)}")
        targets = []
        for i, det in enumerate(ground_truth):
            targets.append(
                TrackedTarget(
                    id=i,
                    bank=init_bank(det.embedding, config.bank_capacity),
                    last_box=det.bbox,
                    last_seen_frame=0,
                )
            )
        tracker = cls(targets, config)
        for i, det in enumerate(ground_truth):
            tracker.trajectories[i].entries[0] = (det.bbox, det.mask, 2.0)
        return tracker

    def step(self, frame: int, detections: list[Detection]) -> FrameResult:
        if frame <= self.last_frame:
            raise ValueError(
                f"out-of-order frame {frame}; already stepped up to {self.last_frame}"
            )
        cfg = self.config
        thr = cfg.thresholds

        kept = [
            (j, d) for j, d in enumerate(detections) if d.conf > thr.sigma_det
        ]
        for _, d in kept:
            if d.embedding.shape[0] != cfg.embedding_dim:
                raise ValueError(
                    f"embedding dim {d.embedding.shape[0]} does not match "
                    f"configured dim {cfg.embedding_dim}"
                )

        matches: list[tuple[int, int, float]] = []
        matched_targets: set[int] = set()
        matched_dets: set[int] = set()
        if kept:
            dets = [d for _, d in kept]
            use_app = cfg.mode != "iou_only"
            cost = build_cost_matrix(self.targets, dets, use_appearance=use_app)
            solution = solve_max_assignment(cost.weights)
            for ti, dj in solution.pairs:
                weight = float(cost.weights[ti, dj])
                if weight <= thr.min_match_weight:
                    continue
                target = self.targets[ti]
                det = dets[dj]
                self._accept(
                    target,
                    det,
                    frame,
                    weight,
                    float(cost.appearance[ti, dj]),
                    int(cost.attaining[ti, dj]),
                )
                matches.append((target.id, kept[dj][0], weight))
                matched_targets.add(target.id)
                matched_dets.add(kept[dj][0])

        self.last_frame = frame
        result = FrameResult(
            frame=frame,
            matches=tuple(matches),
            unmatched_targets=tuple(
                t.id for t in self.targets if t.id not in matched_targets
            ),
            unmatched_detections=tuple(
                j for j in range(len(detections)) if j not in matched_dets
            ),
        )
        return result

    def _accept(
        self,
        target: TrackedTarget,
        det: Detection,
        frame: int,
        weight: float,
        app_sim: float,
        attaining_index: int,
    ) -> None:
        cfg = self.config
        self.trajectories[target.id].entries[frame] = (det.bbox, det.mask, weight)
        target.last_box = det.bbox
        target.last_seen_frame = frame
        if cfg.mode == "dttm":
            target.bank = dttm_update(
                target.bank,
                det.embedding,
                det.conf,
                app_sim,
                attaining_index,
                cfg.thresholds,
                frame,
            )
        elif cfg.mode == "moving_average":
            updated = moving_average_update(
                target.bank.templates[0], det.embedding, self._ma_momentum
            )
            target.bank = TemplateBank(
                templates=(updated,), capacity=target.bank.capacity
            )
        # iou_only: bank stays frozen at the initial template

    def run(self, stream) -> tuple[list[Trajectory], list[FrameResult]]:
        """Fold `step` over an iterator of (frame, detections)."""
        results = [self.step(frame, dets) for frame, dets in stream]
        trajectories = [self.trajectories[t.id] for t in self.targets]
        return trajectories, results
