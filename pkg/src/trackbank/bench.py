"""Association-only throughput benchmark.

Times the per-frame association step (cost matrix + assignment + bank
updates) in isolation: the detection workload is generated up front and
excluded from the measured interval.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .config import ConfigError, RunConfig
from .geometry import BBox
from .template_bank import MatchingThresholds
from .tracker import Detection, Tracker

__all__ = ["BenchResult", "BENCH_PRESETS", "run_benchmark"]

# name -> (num_targets, embedding_dim, detections per frame)
BENCH_PRESETS = {
    "association": (10, 128, 12),
    "association-small": (4, 32, 6),
}


@dataclass(frozen=True)
class BenchResult:
    preset: str
    num_targets: int
    embedding_dim: int
    num_frames: int
    total_seconds: float
    seconds_per_frame: float

    def to_dict(self) -> dict:
        return {
            "preset": self.preset,
            "num_targets": self.num_targets,
            "embedding_dim": self.embedding_dim,
            "num_frames": self.num_frames,
            "total_seconds": self.total_seconds,
            "seconds_per_frame": self.seconds_per_frame,
        }


def _workload(
    num_targets: int, dim: int, dets_per_frame: int, num_frames: int, seed: int
):
    rng = np.random.default_rng(seed)
    anchors = rng.uniform(20.0, 480.0, size=(num_targets, 2))
    embeddings = rng.standard_normal((num_targets, dim))
    embeddings /= np.linalg.norm(embeddings, axis=1, keepdims=True)

    first = [
        Detection(
            bbox=BBox(x=float(anchors[i, 0]), y=float(anchors[i, 1]), w=14.0, h=14.0),
            conf=1.0,
            embedding=embeddings[i],
        )
        for i in range(num_targets)
    ]

    frames = []
    for t in range(1, num_frames + 1):
        dets = []
        for j in range(dets_per_frame):
            i = j % num_targets
            jitter = rng.normal(0.0, 0.8, size=2)
            e = embeddings[i] + rng.normal(0.0, 0.05, size=dim)
            dets.append(
                Detection(
                    bbox=BBox(
                        x=float(anchors[i, 0] + jitter[0]),
                        y=float(anchors[i, 1] + jitter[1]),
                        w=14.0,
                        h=14.0,
                    ),
                    conf=float(rng.uniform(0.75, 0.99)),
                    embedding=e / np.linalg.norm(e),
                )
            )
        frames.append((t, dets))
    return first, frames


def run_benchmark(
    preset: str = "association",
    num_frames: int = 1000,
    mode: str = "dttm",
    seed: int = 0,
) -> BenchResult:
    if preset not in BENCH_PRESETS:
        raise ConfigError(
            f"unknown bench preset {preset!r}; available: {', '.join(sorted(BENCH_PRESETS))}"
        )
    if num_frames < 1:
        raise ConfigError(f"num_frames must be >= 1, got {num_frames}")
    num_targets, dim, dets_per_frame = BENCH_PRESETS[preset]
    first, frames = _workload(num_targets, dim, dets_per_frame, num_frames, seed)
    config = RunConfig(
        mode=mode, thresholds=MatchingThresholds(), embedding_dim=dim, seed=seed
    )
    tracker = Tracker.from_first_frame(first, config)

    start = time.perf_counter()
    for frame, dets in frames:
        tracker.step(frame, dets)
    elapsed = time.perf_counter() - start

    return BenchResult(
        preset=preset,
        num_targets=num_targets,
        embedding_dim=dim,
        num_frames=num_frames,
        total_seconds=elapsed,
        seconds_per_frame=elapsed / num_frames,
    )
