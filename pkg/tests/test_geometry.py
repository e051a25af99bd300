import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trackbank.geometry import (
    BBox,
    BinaryMask,
    MaskFormatError,
    iou,
    mask_iou,
    rasterize_box,
    rle_decode,
    rle_encode,
)

finite_boxes = st.builds(
    BBox,
    x=st.floats(-100, 100),
    y=st.floats(-100, 100),
    w=st.floats(0.01, 50),
    h=st.floats(0.01, 50),
)


def integer_corner_box(rng) -> BBox:
    """Box whose corners sit on integer grid lines (pixel boundaries)."""
    x0, y0 = rng.integers(0, 20, 2)
    w, h = rng.integers(1, 12, 2)
    return BBox(x=float(x0) + w / 2.0, y=float(y0) + h / 2.0, w=float(w), h=float(h))


def pixel_iou_oracle(a: BBox, b: BBox, scale: int = 1) -> float:
    """Count-pixels reference for IoU on a grid enclosing both boxes."""
    x_lo = int(np.floor(min(a.x0, b.x0))) - 1
    y_lo = int(np.floor(min(a.y0, b.y0))) - 1
    x_hi = int(np.ceil(max(a.x1, b.x1))) + 1
    y_hi = int(np.ceil(max(a.y1, b.y1))) + 1
    xs = (np.arange(x_lo * scale, x_hi * scale) + 0.5) / scale
    ys = (np.arange(y_lo * scale, y_hi * scale) + 0.5) / scale
    gx, gy = np.meshgrid(xs, ys)

    def inside(box):
        return (gx >= box.x0) & (gx <= box.x1) & (gy >= box.y0) & (gy <= box.y1)

    ia, ib = inside(a), inside(b)
    union = np.count_nonzero(ia | ib)
    if union == 0:
        return 0.0
    return np.count_nonzero(ia & ib) / union


class TestIou:
    def test_identity(self):
        b = BBox(3.0, -2.0, 4.0, 5.0)
        assert iou(b, b) == 1.0

    def test_disjoint(self):
        assert iou(BBox(0, 0, 2, 2), BBox(10, 10, 2, 2)) == 0.0

    def test_third_overlap(self):
        # intersection 2, union 6
        assert iou(BBox(0, 0, 2, 2), BBox(1, 0, 2, 2)) == pytest.approx(1 / 3, abs=0)

    def test_pixel_oracle_integer_boxes(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            a = integer_corner_box(rng)
            b = integer_corner_box(rng)
            grid_area = (max(a.x1, b.x1) - min(a.x0, b.x0) + 2) * (
                max(a.y1, b.y1) - min(a.y0, b.y0) + 2
            )
            assert iou(a, b) == pytest.approx(pixel_iou_oracle(a, b), abs=2 / grid_area)

    @given(finite_boxes, finite_boxes)
    def test_symmetry_and_range(self, a, b):
        v = iou(a, b)
        assert v == iou(b, a)
        assert 0.0 <= v <= 1.0

    @given(finite_boxes, finite_boxes, st.floats(0.1, 10))
    def test_scale_invariance(self, a, b, s):
        sa = BBox(a.x * s, a.y * s, a.w * s, a.h * s)
        sb = BBox(b.x * s, b.y * s, b.w * s, b.h * s)
        assert iou(sa, sb) == pytest.approx(iou(a, b), abs=1e-12)

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            BBox(0, 0, 0, 1)
        with pytest.raises(ValueError):
            BBox(0, 0, 1, -2)
        with pytest.raises(ValueError):
            BBox(float("nan"), 0, 1, 1)


class TestMaskIou:
    def test_identical(self):
        m = rle_encode(np.eye(4, dtype=bool))
        assert mask_iou(m, m) == 1.0

    def test_disjoint(self):
        a = np.zeros((2, 2), dtype=bool)
        a[0, 0] = True
        b = np.zeros((2, 2), dtype=bool)
        b[1, 1] = True
        assert mask_iou(rle_encode(a), rle_encode(b)) == 0.0

    def test_halves(self):
        grid = np.zeros((4, 4), dtype=bool)
        left = grid.copy()
        left[:, :2] = True
        top = grid.copy()
        top[:2, :] = True
        assert mask_iou(rle_encode(left), rle_encode(top)) == pytest.approx(1 / 3)

    def test_empty_empty_is_one(self):
        e = rle_encode(np.zeros((3, 3), dtype=bool))
        assert mask_iou(e, e) == 1.0

    def test_dim_mismatch(self):
        a = rle_encode(np.zeros((2, 2), dtype=bool))
        b = rle_encode(np.zeros((3, 3), dtype=bool))
        with pytest.raises(MaskFormatError):
            mask_iou(a, b)


class TestRle:
    def test_all_zero(self):
        assert rle_encode(np.zeros((3, 3), dtype=bool)).runs == (9,)

    def test_all_one(self):
        assert rle_encode(np.ones((3, 3), dtype=bool)).runs == (0, 9)

    @settings(max_examples=200)
    @given(
        st.integers(1, 12),
        st.integers(1, 12),
        st.integers(0, 2**32 - 1),
    )
    def test_round_trip(self, h, w, seed):
        grid = np.random.default_rng(seed).random((h, w)) < 0.5
        assert np.array_equal(rle_decode(rle_encode(grid)), grid)

    def test_text_round_trip(self):
        m = rle_encode(np.eye(5, dtype=bool))
        assert BinaryMask.from_text(m.to_text()) == m

    def test_sum_mismatch_rejected(self):
        with pytest.raises(MaskFormatError):
            BinaryMask(width=3, height=3, runs=(4, 4))

    def test_interior_zero_run_rejected(self):
        with pytest.raises(MaskFormatError):
            BinaryMask(width=3, height=3, runs=(4, 0, 5))

    def test_bad_text(self):
        with pytest.raises(MaskFormatError):
            BinaryMask.from_text("3 3 four five")
        with pytest.raises(MaskFormatError):
            BinaryMask.from_text("3 3")


class TestRasterize:
    def test_full_cover(self):
        m = rasterize_box(BBox(2, 2, 10, 10), 4, 4)
        assert np.all(rle_decode(m))

    def test_outside(self):
        m = rasterize_box(BBox(100, 100, 2, 2), 4, 4)
        assert not np.any(rle_decode(m))

    def test_center_block(self):
        # closed extent [1,3]x[1,3]; centers at k+0.5 -> rows/cols 1 and 2
        dense = rle_decode(rasterize_box(BBox(2, 2, 2, 2), 4, 4))
        expected = np.zeros((4, 4), dtype=bool)
        expected[1:3, 1:3] = True
        assert np.array_equal(dense, expected)

    def test_per_pixel_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            b = BBox(*rng.uniform(0, 8, 2), *rng.uniform(0.5, 6, 2))
            dense = rle_decode(rasterize_box(b, 9, 7))
            for r in range(7):
                for c in range(9):
                    inside = (b.x0 <= c + 0.5 <= b.x1) and (b.y0 <= r + 0.5 <= b.y1)
                    assert dense[r, c] == inside
