"""Per-target evolving appearance memory.

Two update modes exist, selected by run configuration and mutually
exclusive: the dynamic template-bank rule (grow a new template on a
confident-but-dissimilar match, evict the least frequently used template
past capacity) and the single-template moving-average baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .matching import as_embedding

__all__ = [
    "Template",
    "TemplateBank",
    "MatchingThresholds",
    "init_bank",
    "dttm_update",
    "moving_average_update",
]


@dataclass(frozen=True)
class Template:
    embedding: np.ndarray
    born_frame: int
    use_count: int = 0


@dataclass(frozen=True)
class TemplateBank:
    """Ordered template list; the frame-0 template is inserted first."""

    templates: tuple[Template, ...]
    capacity: int

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError(f"bank capacity must be >= 1, got {self.capacity}")
        if not (1 <= len(self.templates) <= self.capacity):
            raise ValueError(
                f"bank holds {len(self.templates)} templates, "
                f"allowed range is 1..{self.capacity}"
            )


@dataclass(frozen=True)
class MatchingThresholds:
    """Gates of the association pipeline.

    sigma_det: detection confidence floor applied before matching.
    sigma_conf: confidence gate for creating a new bank template.
    sigma_app: appearance gate; a match below it signals appearance drift.
    min_match_weight: combined-weight floor for accepting a Hungarian pair.
    momentum: blend rate of the moving-average baseline.
    """

    sigma_det: float = 0.5
    sigma_conf: float = 0.5
    sigma_app: float = 0.5
    min_match_weight: float = 0.1
    momentum: float = 0.3

    def __post_init__(self):
        for name in ("sigma_det", "sigma_conf", "sigma_app", "momentum"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if not 0.0 <= self.min_match_weight <= 2.0:
            raise ValueError(
                f"min_match_weight must be in [0, 2], got {self.min_match_weight}"
            )


def init_bank(embedding, capacity: int) -> TemplateBank:
    """Bank holding only the ground-truth template, use count 0."""
    emb = as_embedding(embedding)
    return TemplateBank(
        templates=(Template(embedding=emb, born_frame=0, use_count=0),),
        capacity=capacity,
    )


def dttm_update(
    bank: TemplateBank,
    matched_embedding: np.ndarray,
    matched_conf: float,
    app_sim: float,
    attaining_index: int,
    thresholds: MatchingThresholds,
    frame: int,
) -> TemplateBank:
    """Bank update for an accepted match.

    The attaining template's use count is incremented. If the detection is
    confident (conf > sigma_conf) yet dissimilar (app_sim < sigma_app), its
    embedding becomes a new template; past capacity the template with the
    smallest use count is evicted, ties going to the smallest born frame.
    The initial template is evictable like any other.
    """
    templates = list(bank.templates)
    hit = templates[attaining_index]
    templates[attaining_index] = replace(hit, use_count=hit.use_count + 1)

    if matched_conf > thresholds.sigma_conf and app_sim < thresholds.sigma_app:
        templates.append(
            Template(
                embedding=as_embedding(matched_embedding),
                born_frame=frame,
                use_count=0,
            )
        )
        if len(templates) > bank.capacity:
            evict = min(
                range(len(templates)),
                key=lambda i: (templates[i].use_count, templates[i].born_frame),
            )
            del templates[evict]
    return TemplateBank(templates=tuple(templates), capacity=bank.capacity)


def moving_average_update(
    template: Template, observation: np.ndarray, momentum: float
) -> Template:
    """Convex blend toward the observation; no renormalization."""
    if not 0.0 <= momentum <= 1.0:
        raise ValueError(f"momentum must be in [0, 1], got {momentum}")
    obs = as_embedding(observation)
    blended = (1.0 - momentum) * template.embedding + momentum * obs
    return replace(template, embedding=blended)
