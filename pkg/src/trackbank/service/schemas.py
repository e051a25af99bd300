"""Request/response bodies for the HTTP service.

The nested wire documents (detection frames, trajectory documents, ground
truth) are validated by the io module's parsers, which produce located
errors; here they stay loosely typed to avoid duplicating that logic.
"""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class SimulateRequest(BaseModel):
    preset: Optional[str] = None
    seed: int = 0
    scenario: Optional[dict] = None
    include_first_frame: bool = True


class SimulateResponse(BaseModel):
    ground_truth: dict
    stream: list[dict]
    first_frame: Optional[list[dict]] = None


class TrackRequest(BaseModel):
    first_frame: list[dict]
    stream: list[dict]
    config: dict = Field(default_factory=dict)


class FrameSummary(BaseModel):
    frame: int
    matches: list[tuple[int, int, float]]
    unmatched_targets: list[int]
    unmatched_detections: list[int]


class TrackResponse(BaseModel):
    trajectories: dict
    frames: list[FrameSummary]


class EvaluateRequest(BaseModel):
    trajectories: dict
    ground_truth: dict
    boundary_tolerance: int = 1
    iou_floor: float = 0.5


class EvaluateResponse(BaseModel):
    report: dict
    per_frame: list[tuple[int, int, float, float, int]]


class TanCheckRequest(BaseModel):
    seed: int = 0


class TanCheck(BaseModel):
    name: str
    passed: bool
    detail: str


class TanCheckResponse(BaseModel):
    passed: bool
    checks: list[TanCheck]


class BenchRequest(BaseModel):
    preset: str = "association"
    frames: int = 1000
    mode: str = "dttm"
    seed: int = 0


class BenchResponse(BaseModel):
    preset: str
    num_targets: int
    embedding_dim: int
    num_frames: int
    total_seconds: float
    seconds_per_frame: float


class SessionCreateRequest(BaseModel):
    first_frame: list[dict]
    config: dict = Field(default_factory=dict)


class SessionCreateResponse(BaseModel):
    session_id: str
    num_targets: int


class SessionStepRequest(BaseModel):
    frame: int
    detections: list[dict]


class ErrorResponse(BaseModel):
    detail: Any
