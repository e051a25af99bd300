"""Similarity weights: appearance (cosine), location (IoU), and their sum.

Appearance embeddings are plain 1-D float64 numpy arrays of a fixed
dimensionality per run. The combined weight for a (target, detection) pair is
the unweighted sum of the location and appearance terms, so entries lie in
[-1, 2].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BBox, iou

__all__ = [
    "as_embedding",
    "cosine_similarity",
    "location_weight",
    "appearance_weight",
    "build_cost_matrix",
    "CostMatrices",
]


def as_embedding(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"embedding must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("embedding entries must be finite")
    return arr


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between u and v; 0.0 if either norm is zero."""
    if u.shape != v.shape:
        raise ValueError(f"embedding dims differ: {u.shape[0]} vs {v.shape[0]}")
    # reductions via np.add.reduce so the batched matrix path in
    # build_cost_matrix reproduces these values bit-for-bit
    nu = float(np.sqrt((u * u).sum()))
    nv = float(np.sqrt((v * v).sum()))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float((u * v).sum()) / (nu * nv)


def location_weight(target_box: BBox, det_box: BBox) -> float:
    """IoU of the target's reference box and the detection box."""
    return iou(target_box, det_box)


def appearance_weight(bank, embedding: np.ndarray) -> tuple[float, int]:
    """Best cosine similarity over the bank's templates.

    Returns (similarity, index of the attaining template); ties go to the
    lowest template index. The attaining index feeds the bank's use counts.
    """
    if len(bank.templates) == 0:
        raise ValueError("appearance weight undefined for an empty template bank")
    best = -np.inf
    best_idx = 0
    for idx, template in enumerate(bank.templates):
        sim = cosine_similarity(template.embedding, embedding)
        if sim > best:
            best = sim
            best_idx = idx
    return float(best), best_idx


@dataclass(frozen=True)
class CostMatrices:
    """Combined weights plus the components they were assembled from."""

    weights: np.ndarray
    location: np.ndarray
    appearance: np.ndarray
    attaining: np.ndarray  # bank template index behind each appearance entry


def build_cost_matrix(targets, detections, use_appearance: bool = True) -> CostMatrices:
    """Pairwise combined weights, entry (i, j) = w_loc(i, j) + w_app(i, j).

    With appearance disabled the appearance component is zero and attaining
    indices are -1.
    """
    n, m = len(targets), len(detections)
    app = np.zeros((n, m))
    attaining = np.full((n, m), -1, dtype=np.int64)

    # IoU block, broadcast over (target, detection) pairs
    t_ext = np.array(
        [[b.x0, b.x1, b.y0, b.y1] for b in (t.last_box for t in targets)]
    ).reshape(n, 4, 1)
    d_ext = (
        np.array([[b.x0, b.x1, b.y0, b.y1] for b in (d.bbox for d in detections)])
        .reshape(m, 4)
        .T.reshape(1, 4, m)
    )
    ix = np.maximum(
        np.minimum(t_ext[:, 1], d_ext[:, 1]) - np.maximum(t_ext[:, 0], d_ext[:, 0]), 0.0
    )
    iy = np.maximum(
        np.minimum(t_ext[:, 3], d_ext[:, 3]) - np.maximum(t_ext[:, 2], d_ext[:, 2]), 0.0
    )
    inter = ix * iy
    t_area = ((t_ext[:, 1] - t_ext[:, 0]) * (t_ext[:, 3] - t_ext[:, 2])).reshape(n, 1)
    d_area = ((d_ext[:, 1] - d_ext[:, 0]) * (d_ext[:, 3] - d_ext[:, 2])).reshape(1, m)
    loc = inter / (t_area + d_area - inter)

    if use_appearance and m > 0:
        det_mat = np.stack([d.embedding for d in detections])  # (m, D)
        det_norm = np.sqrt((det_mat * det_mat).sum(axis=1))
        safe_det = np.where(det_norm == 0.0, 1.0, det_norm)
        # one batched reduction across the concatenated banks of every
        # target; the multiply-then-sum form keeps each entry bit-identical
        # to cosine_similarity on the corresponding pair
        all_rows = [t.embedding for target in targets for t in target.bank.templates]
        bank_mat = np.stack(all_rows)
        bank_norm = np.sqrt((bank_mat * bank_mat).sum(axis=1))
        safe_bank = np.where(bank_norm == 0.0, 1.0, bank_norm)
        sims = (bank_mat[:, None, :] * det_mat[None, :, :]).sum(axis=2) / (
            safe_bank[:, None] * safe_det[None, :]
        )
        sims[bank_norm == 0.0, :] = 0.0
        sims[:, det_norm == 0.0] = 0.0
        cols = np.arange(m)
        row = 0
        for i, target in enumerate(targets):
            block = sims[row : row + len(target.bank.templates)]
            attaining[i] = np.argmax(block, axis=0)  # lowest index wins ties
            app[i] = block[attaining[i], cols]
            row += len(target.bank.templates)
    return CostMatrices(
        weights=loc + app, location=loc, appearance=app, attaining=attaining
    )
