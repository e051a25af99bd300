"""Run configuration shared by the tracker, CLI and service."""

from __future__ import annotations

from dataclasses import dataclass, field

from .template_bank import MatchingThresholds

__all__ = ["RunConfig", "MODES", "ConfigError"]

MODES = ("dttm", "moving_average", "iou_only")


class ConfigError(ValueError):
    """Invalid run or scenario configuration; the message names the field."""


@dataclass(frozen=True)
class RunConfig:
    mode: str = "dttm"
    thresholds: MatchingThresholds = field(default_factory=MatchingThresholds)
    bank_capacity: int = 5
    embedding_dim: int = 8
    boundary_tolerance: int = 1
    id_switch_iou_floor: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.bank_capacity < 1:
            raise ConfigError(f"bank_capacity must be >= 1, got {self.bank_capacity}")
        if self.embedding_dim < 1:
            raise ConfigError(f"embedding_dim must be >= 1, got {self.embedding_dim}")
        if self.boundary_tolerance < 0:
            raise ConfigError(
                f"boundary_tolerance must be >= 0, got {self.boundary_tolerance}"
            )
        if not 0.0 <= self.id_switch_iou_floor <= 1.0:
            raise ConfigError(
                f"id_switch_iou_floor must be in [0, 1], got {self.id_switch_iou_floor}"
            )

    def to_dict(self) -> dict:
        t = self.thresholds
        return {
            "mode": self.mode,
            "thresholds": {
                "sigma_det": t.sigma_det,
                "sigma_conf": t.sigma_conf,
                "sigma_app": t.sigma_app,
                "min_match_weight": t.min_match_weight,
                "momentum": t.momentum,
            },
            "bank_capacity": self.bank_capacity,
            "embedding_dim": self.embedding_dim,
            "boundary_tolerance": self.boundary_tolerance,
            "id_switch_iou_floor": self.id_switch_iou_floor,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"run config must be an object, got {type(data).__name__}")
        known = {
            "mode",
            "thresholds",
            "bank_capacity",
            "embedding_dim",
            "boundary_tolerance",
            "id_switch_iou_floor",
            "seed",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown run config fields: {sorted(unknown)}")
        kwargs = {k: v for k, v in data.items() if k != "thresholds"}
        if "thresholds" in data:
            try:
                kwargs["thresholds"] = MatchingThresholds(**data["thresholds"])
            except TypeError as exc:
                raise ConfigError(f"bad thresholds object: {exc}") from exc
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(f"bad run config: {exc}") from exc
