"""HTTP service exposing the simulator, tracker, evaluator and checks.

Stateless endpoints take whole documents; the /sessions endpoints keep a
live tracker per session for online frame-at-a-time stepping.
"""

from __future__ import annotations

import threading
import uuid

from fastapi import FastAPI, HTTPException

from ..bench import run_benchmark
from ..config import ConfigError, RunConfig
from ..io import (
    DetectionStreamError,
    GroundTruthFormatError,
    TrajectoryFormatError,
    frames_from_wire,
    frames_to_wire,
    ground_truth_from_wire,
    ground_truth_to_wire,
    trajectories_from_wire,
    trajectories_to_wire,
)
from ..metrics import evaluate
from ..simulator import (
    first_frame_detections,
    generate,
    preset,
    scenario_from_dict,
)
from ..tan import run_check_suite
from ..tracker import Tracker
from . import schemas

_CLIENT_ERRORS = (
    ConfigError,
    DetectionStreamError,
    TrajectoryFormatError,
    GroundTruthFormatError,
    ValueError,
)


class _SessionStore:
    def __init__(self):
        self._lock = threading.Lock()
        self._sessions: dict[str, tuple[threading.Lock, Tracker]] = {}

    def create(self, tracker: Tracker) -> str:
        session_id = uuid.uuid4().hex
        with self._lock:
            self._sessions[session_id] = (threading.Lock(), tracker)
        return session_id

    def get(self, session_id: str) -> tuple[threading.Lock, Tracker]:
        with self._lock:
            entry = self._sessions.get(session_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"no session {session_id!r}")
        return entry

    def delete(self, session_id: str) -> None:
        with self._lock:
            if self._sessions.pop(session_id, None) is None:
                raise HTTPException(status_code=404, detail=f"no session {session_id!r}")


def _tracker_from_request(first_frame: list[dict], config: dict) -> Tracker:
    run_config = RunConfig.from_dict(config)
    frames = frames_from_wire(first_frame)
    if len(frames) != 1 or frames[0][0] != 0:
        raise ValueError("first_frame must contain exactly one frame record with frame 0")
    return Tracker.from_first_frame(frames[0][1], run_config)


def create_app() -> FastAPI:
    app = FastAPI(title="trackbank", version="1.0.0")
    sessions = _SessionStore()

    def _client_error(exc: Exception) -> HTTPException:
        return HTTPException(status_code=422, detail=str(exc))

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(req: schemas.SimulateRequest):
        try:
            if (req.preset is None) == (req.scenario is None):
                raise ValueError("provide exactly one of 'preset' or 'scenario'")
            if req.preset is not None:
                scenario = preset(req.preset, req.seed)
            else:
                scenario = scenario_from_dict(req.scenario)
            gt, stream = generate(scenario)
            first = None
            if req.include_first_frame:
                first = frames_to_wire([(0, first_frame_detections(gt, scenario.with_masks))])
            return schemas.SimulateResponse(
                ground_truth=ground_truth_to_wire(gt),
                stream=frames_to_wire(stream),
                first_frame=first,
            )
        except _CLIENT_ERRORS as exc:
            raise _client_error(exc)

    @app.post("/track", response_model=schemas.TrackResponse)
    def track(req: schemas.TrackRequest):
        try:
            tracker = _tracker_from_request(req.first_frame, req.config)
            stream = frames_from_wire(req.stream)
            trajectories, results = tracker.run(stream)
            banks = {t.id: t.bank for t in tracker.targets}
            return schemas.TrackResponse(
                trajectories=trajectories_to_wire(trajectories, banks),
                frames=[
                    schemas.FrameSummary(
                        frame=r.frame,
                        matches=list(r.matches),
                        unmatched_targets=list(r.unmatched_targets),
                        unmatched_detections=list(r.unmatched_detections),
                    )
                    for r in results
                ],
            )
        except _CLIENT_ERRORS as exc:
            raise _client_error(exc)

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate_route(req: schemas.EvaluateRequest):
        try:
            trajectories, _ = trajectories_from_wire(req.trajectories)
            gt = ground_truth_from_wire(req.ground_truth)
            report = evaluate(
                trajectories,
                gt,
                boundary_tolerance=req.boundary_tolerance,
                iou_floor=req.iou_floor,
            )
            return schemas.EvaluateResponse(
                report=report.to_dict(), per_frame=list(report.per_frame)
            )
        except _CLIENT_ERRORS as exc:
            raise _client_error(exc)

    @app.post("/tan-check", response_model=schemas.TanCheckResponse)
    def tan_check(req: schemas.TanCheckRequest):
        checks = [
            schemas.TanCheck(name=name, passed=passed, detail=detail)
            for name, passed, detail in run_check_suite(seed=req.seed)
        ]
        return schemas.TanCheckResponse(
            passed=all(c.passed for c in checks), checks=checks
        )

    @app.post("/bench", response_model=schemas.BenchResponse)
    def bench(req: schemas.BenchRequest):
        try:
            result = run_benchmark(
                preset=req.preset, num_frames=req.frames, mode=req.mode, seed=req.seed
            )
        except _CLIENT_ERRORS as exc:
            raise _client_error(exc)
        return schemas.BenchResponse(**result.to_dict())

    @app.post("/sessions", response_model=schemas.SessionCreateResponse, status_code=201)
    def create_session(req: schemas.SessionCreateRequest):
        try:
            tracker = _tracker_from_request(req.first_frame, req.config)
        except _CLIENT_ERRORS as exc:
            raise _client_error(exc)
        session_id = sessions.create(tracker)
        return schemas.SessionCreateResponse(
            session_id=session_id, num_targets=len(tracker.targets)
        )

    @app.post("/sessions/{session_id}/step", response_model=schemas.FrameSummary)
    def step_session(session_id: str, req: schemas.SessionStepRequest):
        lock, tracker = sessions.get(session_id)
        with lock:
            try:
                frames = frames_from_wire([{"frame": req.frame, "detections": req.detections}])
                result = tracker.step(frames[0][0], frames[0][1])
            except _CLIENT_ERRORS as exc:
                raise _client_error(exc)
        return schemas.FrameSummary(
            frame=result.frame,
            matches=list(result.matches),
            unmatched_targets=list(result.unmatched_targets),
            unmatched_detections=list(result.unmatched_detections),
        )

    @app.get("/sessions/{session_id}/trajectories")
    def session_trajectories(session_id: str):
        lock, tracker = sessions.get(session_id)
        with lock:
            trajectories = [tracker.trajectories[t.id] for t in tracker.targets]
            banks = {t.id: t.bank for t in tracker.targets}
            return trajectories_to_wire(trajectories, banks)

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        sessions.delete(session_id)

    return app
