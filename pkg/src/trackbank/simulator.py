"""Deterministic synthetic-scenario generator.

Ground-truth objects follow parametric motions (linear velocity plus a
sinusoidal offset); appearance is a unit vector on the sphere that can drift
toward a new direction at configured frames. The emitted detection stream
adds box jitter, small-angle appearance noise, misses, occlusion windows and
false positives.

All randomness is drawn from per-(object, frame, purpose) Philox streams
keyed on the scenario seed, so output is byte-identical across runs and
platforms and independent of generation order.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .config import ConfigError
from .geometry import BBox, BinaryMask, rasterize_box
from .tracker import Detection

__all__ = [
    "MotionSpec",
    "DriftEvent",
    "OcclusionWindow",
    "ScenarioConfig",
    "GroundTruthFrame",
    "GroundTruthObject",
    "GroundTruth",
    "generate",
    "first_frame_detections",
    "preset",
    "PRESET_NAMES",
    "scenario_to_dict",
    "scenario_from_dict",
]

# purpose tags for the per-(object, frame) PRNG streams
_S_JITTER = 1
_S_APPNOISE = 2
_S_CONF = 3
_S_MISS = 4
_S_FPS = 5  # false positives, keyed per frame with object slot 2**20


@dataclass(frozen=True)
class MotionSpec:
    """Box center at frame t: start + velocity*t + amplitude*sin(2*pi*t/period + phase)."""

    start_x: float
    start_y: float
    vel_x: float = 0.0
    vel_y: float = 0.0
    amp_x: float = 0.0
    amp_y: float = 0.0
    period: float = 30.0
    phase: float = 0.0
    width: float = 10.0
    height: float = 10.0


@dataclass(frozen=True)
class DriftEvent:
    """From `frame` on, blend the object's appearance toward a new direction.

    `direction_axis` indexes the embedding coordinate of the drift target
    direction; `blend` in (0, 1] is applied once per frame (1.0 = abrupt).
    """

    object_index: int
    frame: int
    direction_axis: int
    blend: float = 1.0
    # optional explicit target direction overriding direction_axis
    direction: tuple[float, ...] | None = None


@dataclass(frozen=True)
class OcclusionWindow:
    """Object invisible for frames first..last inclusive."""

    object_index: int
    first_frame: int
    last_frame: int


@dataclass(frozen=True)
class ScenarioConfig:
    num_objects: int
    num_frames: int
    scene: tuple[int, int] = (96, 96)
    embedding_dim: int = 8
    motions: tuple[MotionSpec, ...] = ()
    drift_events: tuple[DriftEvent, ...] = ()
    occlusion_windows: tuple[OcclusionWindow, ...] = ()
    fp_rate: float = 0.0
    box_jitter_sigma: float = 0.0
    app_noise_sigma: float = 0.0
    conf_matched_mean: float = 0.9
    conf_fp_mean: float = 0.6
    conf_spread: float = 0.0
    miss_rate: float = 0.0
    seed: int = 0
    with_masks: bool = True

    def __post_init__(self):
        if self.num_frames < 1:
            raise ConfigError(f"num_frames must be >= 1, got {self.num_frames}")
        if self.num_objects < 1:
            raise ConfigError(f"num_objects must be >= 1, got {self.num_objects}")
        if self.embedding_dim < 2:
            raise ConfigError(f"embedding_dim must be >= 2, got {self.embedding_dim}")
        if self.scene[0] < 1 or self.scene[1] < 1:
            raise ConfigError(f"scene dims must be positive, got {self.scene}")
        for name in ("fp_rate", "miss_rate", "conf_matched_mean", "conf_fp_mean", "conf_spread"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if self.box_jitter_sigma < 0:
            raise ConfigError(f"box_jitter_sigma must be >= 0, got {self.box_jitter_sigma}")
        if self.app_noise_sigma < 0:
            raise ConfigError(f"app_noise_sigma must be >= 0, got {self.app_noise_sigma}")
        if len(self.motions) != self.num_objects:
            raise ConfigError(
                f"motions: expected {self.num_objects} specs, got {len(self.motions)}"
            )
        for ev in self.drift_events:
            if not 0 <= ev.object_index < self.num_objects:
                raise ConfigError(f"drift_events: bad object_index {ev.object_index}")
            if not 0.0 < ev.blend <= 1.0:
                raise ConfigError(f"drift_events: blend must be in (0, 1], got {ev.blend}")
        for ow in self.occlusion_windows:
            if not 0 <= ow.object_index < self.num_objects:
                raise ConfigError(f"occlusion_windows: bad object_index {ow.object_index}")
            if ow.first_frame > ow.last_frame:
                raise ConfigError(
                    f"occlusion_windows: empty range {ow.first_frame}..{ow.last_frame}"
                )


@dataclass(frozen=True)
class GroundTruthFrame:
    bbox: BBox
    visible: bool
    embedding: np.ndarray


@dataclass(frozen=True)
class GroundTruthObject:
    object_id: int
    frames: tuple[GroundTruthFrame, ...]


@dataclass(frozen=True)
class GroundTruth:
    scene: tuple[int, int]
    num_frames: int
    objects: tuple[GroundTruthObject, ...]

    def mask_for(self, object_id: int, frame: int) -> BinaryMask:
        gtf = self.objects[object_id].frames[frame]
        return rasterize_box(gtf.bbox, self.scene[0], self.scene[1])


def _stream(seed: int, obj: int, frame: int, purpose: int) -> np.random.Generator:
    ctx = (obj & 0xFFFFF) << 40 | (frame & 0xFFFFFFFF) << 8 | (purpose & 0xFF)
    return np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF, ctx]))


def _unit_axis(dim: int, axis: int) -> np.ndarray:
    v = np.zeros(dim)
    v[axis % dim] = 1.0
    return v


def _rotate_towards(e: np.ndarray, target: np.ndarray, blend: float) -> np.ndarray:
    mixed = (1.0 - blend) * e + blend * target
    norm = np.linalg.norm(mixed)
    if norm == 0.0:
        return target.copy()
    return mixed / norm


def _angular_noise(e: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Rotate e by a small random angle within the unit sphere."""
    if sigma == 0.0:
        return e.copy()
    angle = float(rng.normal(0.0, sigma))
    r = rng.normal(size=e.shape[0])
    r = r - np.dot(r, e) * e
    norm = np.linalg.norm(r)
    if norm == 0.0:
        return e.copy()
    r = r / norm
    out = math.cos(angle) * e + math.sin(angle) * r
    return out / np.linalg.norm(out)


def _box_at(motion: MotionSpec, frame: int) -> BBox:
    t = float(frame)
    wobble = 2.0 * math.pi * t / motion.period + motion.phase
    x = motion.start_x + motion.vel_x * t + motion.amp_x * math.sin(wobble)
    y = motion.start_y + motion.vel_y * t + motion.amp_y * math.sin(wobble)
    return BBox(x=x, y=y, w=motion.width, h=motion.height)


def _confidence(mean: float, spread: float, rng: np.random.Generator) -> float:
    if spread == 0.0:
        return mean
    sign = 1.0 if rng.random() < 0.5 else -1.0
    return float(min(1.0, max(0.0, mean + sign * spread)))


def generate(config: ScenarioConfig) -> tuple[GroundTruth, list[tuple[int, list[Detection]]]]:
    """Ground truth for frames 0..T-1 and a detection stream for frames 1..T-1."""
    scene_w, scene_h = config.scene
    dim = config.embedding_dim

    occluded: dict[int, set[int]] = {i: set() for i in range(config.num_objects)}
    for ow in config.occlusion_windows:
        occluded[ow.object_index].update(range(ow.first_frame, ow.last_frame + 1))

    drift_by_object: dict[int, list[DriftEvent]] = {}
    for ev in config.drift_events:
        drift_by_object.setdefault(ev.object_index, []).append(ev)

    objects = []
    for i in range(config.num_objects):
        motion = config.motions[i]
        embedding = _unit_axis(dim, i)
        frames = []
        for t in range(config.num_frames):
            for ev in drift_by_object.get(i, ()):
                if t >= ev.frame and t > 0:
                    target = (
                        np.asarray(ev.direction, dtype=np.float64)
                        if ev.direction is not None
                        else _unit_axis(dim, ev.direction_axis)
                    )
                    target = target / np.linalg.norm(target)
                    embedding = _rotate_towards(embedding, target, ev.blend)
            frames.append(
                GroundTruthFrame(
                    bbox=_box_at(motion, t),
                    visible=t not in occluded[i],
                    embedding=embedding.copy(),
                )
            )
        objects.append(GroundTruthObject(object_id=i, frames=tuple(frames)))
    ground_truth = GroundTruth(
        scene=config.scene, num_frames=config.num_frames, objects=tuple(objects)
    )

    stream: list[tuple[int, list[Detection]]] = []
    for t in range(1, config.num_frames):
        dets: list[Detection] = []
        for i in range(config.num_objects):
            gtf = objects[i].frames[t]
            if not gtf.visible:
                continue
            if config.miss_rate > 0.0:
                if _stream(config.seed, i, t, _S_MISS).random() < config.miss_rate:
                    continue
            box = gtf.bbox
            if config.box_jitter_sigma > 0.0:
                jit = _stream(config.seed, i, t, _S_JITTER).normal(
                    0.0, config.box_jitter_sigma, size=2
                )
                box = replace(box, x=box.x + float(jit[0]), y=box.y + float(jit[1]))
            emb = _angular_noise(
                gtf.embedding,
                config.app_noise_sigma,
                _stream(config.seed, i, t, _S_APPNOISE),
            )
            conf = _confidence(
                config.conf_matched_mean,
                config.conf_spread,
                _stream(config.seed, i, t, _S_CONF),
            )
            mask = rasterize_box(box, scene_w, scene_h) if config.with_masks else None
            dets.append(Detection(bbox=box, conf=conf, embedding=emb, mask=mask))
        if config.fp_rate > 0.0:
            fp_rng = _stream(config.seed, 1 << 20, t, _S_FPS)
            n_fp = int(fp_rng.poisson(config.fp_rate))
            for _ in range(n_fp):
                cx = float(fp_rng.uniform(0, scene_w))
                cy = float(fp_rng.uniform(0, scene_h))
                w = float(fp_rng.uniform(4, max(8.0, scene_w / 6)))
                h = float(fp_rng.uniform(4, max(8.0, scene_h / 6)))
                e = fp_rng.normal(size=dim)
                e = e / np.linalg.norm(e)
                conf = _confidence(config.conf_fp_mean, config.conf_spread, fp_rng)
                box = BBox(x=cx, y=cy, w=w, h=h)
                mask = rasterize_box(box, scene_w, scene_h) if config.with_masks else None
                dets.append(Detection(bbox=box, conf=conf, embedding=e, mask=mask))
        stream.append((t, dets))
    return ground_truth, stream


def first_frame_detections(gt: GroundTruth, with_masks: bool = True) -> list[Detection]:
    """Frame-0 annotations as unit-confidence detections."""
    dets = []
    for obj in gt.objects:
        gtf = obj.frames[0]
        mask = (
            rasterize_box(gtf.bbox, gt.scene[0], gt.scene[1]) if with_masks else None
        )
        dets.append(
            Detection(bbox=gtf.bbox, conf=1.0, embedding=gtf.embedding.copy(), mask=mask)
        )
    return dets


def _crossing_config(seed: int) -> ScenarioConfig:
    # Two same-size objects on fast converging paths exchange sides between
    # frames 6 and 7: each lands exactly on the other's previous position, so
    # location alone prefers the swapped pairing while the orthogonal
    # appearance embeddings keep identities apart.
    return ScenarioConfig(
        num_objects=2,
        num_frames=16,
        scene=(96, 48),
        embedding_dim=8,
        motions=(
            MotionSpec(start_x=18.0, start_y=24.0, vel_x=4.5, width=12.0, height=12.0),
            MotionSpec(start_x=76.5, start_y=24.0, vel_x=-4.5, width=12.0, height=12.0),
        ),
        box_jitter_sigma=0.35,
        app_noise_sigma=0.06,
        conf_matched_mean=0.9,
        conf_spread=0.05,
        seed=seed,
    )


def _deformation_config(seed: int) -> ScenarioConfig:
    # Same exchange geometry as "crossing", but object 0 abruptly changes
    # appearance one frame before the exchange; the new appearance keeps a
    # mild similarity to object 1. A single moving-average update cannot
    # recover in time, while a freshly banked template can.
    dim = 8
    direction = [0.0] * dim
    direction[1] = 0.35  # overlap with object 1's appearance axis
    direction[2] = math.sqrt(1.0 - 0.35 * 0.35)
    return ScenarioConfig(
        num_objects=2,
        num_frames=16,
        scene=(96, 48),
        embedding_dim=dim,
        motions=(
            MotionSpec(start_x=18.0, start_y=24.0, vel_x=4.5, width=12.0, height=12.0),
            MotionSpec(start_x=76.5, start_y=24.0, vel_x=-4.5, width=12.0, height=12.0),
        ),
        drift_events=(
            DriftEvent(
                object_index=0,
                frame=6,
                direction_axis=2,
                blend=1.0,
                direction=tuple(direction),
            ),
        ),
        box_jitter_sigma=0.3,
        app_noise_sigma=0.06,
        conf_matched_mean=0.9,
        conf_spread=0.05,
        seed=seed,
    )


def _occlusion_config(seed: int) -> ScenarioConfig:
    # object 0 disappears for 10 of 40 frames and reappears further along
    return ScenarioConfig(
        num_objects=2,
        num_frames=40,
        scene=(96, 48),
        embedding_dim=8,
        motions=(
            MotionSpec(start_x=14.0, start_y=16.0, vel_x=1.7, width=12.0, height=12.0),
            MotionSpec(start_x=20.0, start_y=34.0, vel_x=1.1, width=12.0, height=12.0),
        ),
        occlusion_windows=(OcclusionWindow(object_index=0, first_frame=15, last_frame=24),),
        box_jitter_sigma=0.3,
        app_noise_sigma=0.05,
        conf_matched_mean=0.9,
        conf_spread=0.05,
        seed=seed,
    )


_PRESETS = {
    "crossing": _crossing_config,
    "deformation": _deformation_config,
    "occlusion": _occlusion_config,
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def preset(name: str, seed: int = 0) -> ScenarioConfig:
    """Version-pinned scenario configs mirroring classic failure modes."""
    if name not in _PRESETS:
        raise ConfigError(
            f"unknown preset {name!r}; available presets: {', '.join(PRESET_NAMES)}"
        )
    return _PRESETS[name](seed)


def scenario_to_dict(config: ScenarioConfig) -> dict:
    data = dataclasses.asdict(config)
    data["scene"] = list(config.scene)
    data["motions"] = [dataclasses.asdict(m) for m in config.motions]
    data["drift_events"] = [
        {**dataclasses.asdict(ev), "direction": list(ev.direction) if ev.direction else None}
        for ev in config.drift_events
    ]
    data["occlusion_windows"] = [dataclasses.asdict(ow) for ow in config.occlusion_windows]
    return data


def scenario_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"scenario must be an object, got {type(data).__name__}")
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown scenario fields: {sorted(unknown)}")
    kwargs = dict(data)
    try:
        if "scene" in kwargs:
            kwargs["scene"] = (kwargs["scene"][0], kwargs["scene"][1])
        kwargs["motions"] = tuple(MotionSpec(**m) for m in kwargs.get("motions", ()))
        kwargs["drift_events"] = tuple(
            DriftEvent(**{**ev, "direction": tuple(ev["direction"]) if ev.get("direction") else None})
            for ev in kwargs.get("drift_events", ())
        )
        kwargs["occlusion_windows"] = tuple(
            OcclusionWindow(**ow) for ow in kwargs.get("occlusion_windows", ())
        )
        return ScenarioConfig(**kwargs)
    except (TypeError, IndexError, KeyError) as exc:
        raise ConfigError(f"bad scenario config: {exc}") from exc
