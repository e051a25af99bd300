"""Online multi-object tracking association with evolving template banks.

Core pieces: bounding-box/mask geometry, maximum-weight bipartite
assignment, appearance template banks with use-count eviction, a
deterministic scenario simulator, J/F + identity-switch evaluation, and a
small temporal feature-fusion kernel with verified gradients.
"""

from .assignment import Assignment, brute_force_assignment, solve_max_assignment
from .config import MODES, ConfigError, RunConfig
from .geometry import BBox, BinaryMask, MaskFormatError, iou, mask_iou
from .metrics import EvalReport, boundary_f, evaluate, id_switches, region_j
from .simulator import GroundTruth, ScenarioConfig, generate, preset
from .template_bank import (
    MatchingThresholds,
    Template,
    TemplateBank,
    dttm_update,
    init_bank,
    moving_average_update,
)
from .tracker import Detection, FrameResult, Tracker, Trajectory, merge_masks

__version__ = "1.0.0"

__all__ = [
    "Assignment",
    "BBox",
    "BinaryMask",
    "ConfigError",
    "Detection",
    "EvalReport",
    "FrameResult",
    "GroundTruth",
    "MODES",
    "MaskFormatError",
    "MatchingThresholds",
    "RunConfig",
    "ScenarioConfig",
    "Template",
    "TemplateBank",
    "Tracker",
    "Trajectory",
    "boundary_f",
    "brute_force_assignment",
    "dttm_update",
    "evaluate",
    "generate",
    "id_switches",
    "init_bank",
    "iou",
    "mask_iou",
    "merge_masks",
    "moving_average_update",
    "preset",
    "region_j",
    "solve_max_assignment",
]
