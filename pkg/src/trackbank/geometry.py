"""Axis-aligned box arithmetic and RLE binary masks.

Boxes are continuous, center-format ``[x, y, w, h]``; the box extent is the
closed interval ``[x - w/2, x + w/2] x [y - h/2, y + h/2]``. Masks are stored
run-length encoded over a row-major scan, first run counting zeros.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BBox",
    "BinaryMask",
    "MaskFormatError",
    "iou",
    "mask_iou",
    "rle_encode",
    "rle_decode",
    "rasterize_box",
]


class MaskFormatError(ValueError):
    """Raised for malformed RLE runs or incomparable mask dimensions."""


@dataclass(frozen=True)
class BBox:
    """Center-format box: (x, y) center, (w, h) strictly positive size."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"BBox.{name} must be finite, got {v!r}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"BBox size must be positive, got w={self.w}, h={self.h}")

    @property
    def x0(self) -> float:
        return self.x - self.w / 2.0

    @property
    def x1(self) -> float:
        return self.x + self.w / 2.0

    @property
    def y0(self) -> float:
        return self.y - self.h / 2.0

    @property
    def y1(self) -> float:
        return self.y + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h

    def to_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]

    @classmethod
    def from_list(cls, values) -> "BBox":
        if len(values) != 4:
            raise ValueError(f"bbox must have 4 entries, got {len(values)}")
        return cls(float(values[0]), float(values[1]), float(values[2]), float(values[3]))


@dataclass(frozen=True)
class BinaryMask:
    """RLE-encoded binary mask over a row-major pixel scan.

    ``runs`` alternate 0-region / 1-region lengths, starting with the count of
    0-pixels; only the first run may be zero.
    """

    width: int
    height: int
    runs: tuple[int, ...]

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise MaskFormatError(
                f"mask dims must be positive, got {self.width}x{self.height}"
            )
        if not self.runs:
            raise MaskFormatError("mask needs at least one run")
        if any(r < 0 for r in self.runs):
            raise MaskFormatError("run lengths must be non-negative")
        if any(r == 0 for r in self.runs[1:]):
            raise MaskFormatError("only the first run may be zero")
        total = sum(self.runs)
        if total != self.width * self.height:
            raise MaskFormatError(
                f"runs sum to {total}, expected {self.width * self.height} "
                f"for a {self.width}x{self.height} mask"
            )

    @property
    def num_foreground(self) -> int:
        return sum(self.runs[1::2])

    def to_text(self) -> str:
        """Space-separated text form: ``width height r0 r1 ...``."""
        return " ".join(str(v) for v in (self.width, self.height, *self.runs))

    @classmethod
    def from_text(cls, text: str) -> "BinaryMask":
        parts = text.split()
        if len(parts) < 3:
            raise MaskFormatError(f"RLE text needs width, height and runs: {text!r}")
        try:
            values = [int(p) for p in parts]
        except ValueError as exc:
            raise MaskFormatError(f"non-integer token in RLE text: {text!r}") from exc
        return cls(values[0], values[1], tuple(values[2:]))


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    iw = min(a.x1, b.x1) - max(a.x0, b.x0)
    ih = min(a.y1, b.y1) - max(a.y0, b.y0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    # areas from the same extents as the intersection, so inter <= union
    # and iou(B, B) == 1.0 hold exactly in floating point
    area_a = (a.x1 - a.x0) * (a.y1 - a.y0)
    area_b = (b.x1 - b.x0) * (b.y1 - b.y0)
    union = area_a + area_b - inter
    return inter / union


def _check_same_dims(a: BinaryMask, b: BinaryMask) -> None:
    if a.width != b.width or a.height != b.height:
        raise MaskFormatError(
            f"mask dims differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    """Pixel IoU of two equal-size masks; 1.0 when both are empty."""
    _check_same_dims(a, b)
    da = rle_decode(a)
    db = rle_decode(b)
    inter = int(np.count_nonzero(da & db))
    union = int(np.count_nonzero(da | db))
    if union == 0:
        return 1.0
    return inter / union


def rle_encode(dense: np.ndarray) -> BinaryMask:
    """Encode a 2D bit grid (rows x cols) into a BinaryMask."""
    grid = np.asarray(dense)
    if grid.ndim != 2:
        raise MaskFormatError(f"expected a 2D grid, got shape {grid.shape}")
    height, width = grid.shape
    flat = (grid.reshape(-1) != 0).astype(np.int8)
    # boundaries of constant runs
    change = np.flatnonzero(np.diff(flat)) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [flat.size]))
    lengths = (ends - starts).tolist()
    runs = lengths if flat[0] == 0 else [0] + lengths
    return BinaryMask(width=int(width), height=int(height), runs=tuple(runs))


def rle_decode(m: BinaryMask) -> np.ndarray:
    """Decode a BinaryMask into a 2D boolean grid (height x width)."""
    values = np.arange(len(m.runs)) % 2 == 1
    flat = np.repeat(values, np.asarray(m.runs, dtype=np.int64))
    return flat.reshape(m.height, m.width)


def rasterize_box(b: BBox, width: int, height: int) -> BinaryMask:
    """Rasterize a box onto a pixel grid.

    A pixel (row, col), with center at (col + 0.5, row + 0.5), is foreground
    iff its center lies inside the closed box extent. Clipped to the grid.
    """
    if width < 1 or height < 1:
        raise ValueError(f"grid dims must be positive, got {width}x{height}")
    cols = np.arange(width) + 0.5
    rows = np.arange(height) + 0.5
    in_x = (cols >= b.x0) & (cols <= b.x1)
    in_y = (rows >= b.y0) & (rows <= b.y1)
    grid = np.logical_and.outer(in_y, in_x)
    return rle_encode(grid)
