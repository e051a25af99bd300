import numpy as np
import pytest

from trackbank.tan import (
    FusionParams,
    conv3d,
    conv3d_backward,
    conv3d_naive,
    finite_diff_check,
    fuse_stage,
    fuse_stage_backward,
    run_check_suite,
    temporal_max_pool,
    temporal_max_pool_backward,
)


def rng():
    return np.random.default_rng(0)


class TestConv3d:
    def test_zero_kernel(self):
        x = rng().normal(size=(2, 3, 4, 4))
        out = conv3d(x, np.zeros((3, 2, 3, 1, 1)), np.zeros(3))
        assert out.shape == (3, 3, 4, 4)
        assert np.all(out == 0)

    def test_identity_kernel(self):
        x = rng().normal(size=(1, 5, 4, 4))
        k = np.zeros((1, 1, 3, 1, 1))
        k[0, 0, 1, 0, 0] = 1.0  # center tap
        assert np.array_equal(conv3d(x, k, np.zeros(1)), x)

    def test_spatial_identity_kernel(self):
        x = rng().normal(size=(2, 3, 5, 5))
        k = np.zeros((2, 2, 1, 3, 3))
        k[0, 0, 0, 1, 1] = 1.0
        k[1, 1, 0, 1, 1] = 1.0
        assert np.array_equal(conv3d(x, k, np.zeros(2)), x)

    def test_matches_naive_oracle(self):
        g = rng()
        for shape in ((3, 1, 1), (1, 3, 3)):
            for _ in range(5):
                x = g.normal(size=(2, 4, 5, 5))
                k = g.normal(size=(3, 2, *shape))
                b = g.normal(size=3)
                fast = conv3d(x, k, b)
                slow = conv3d_naive(x, k, b)
                assert np.max(np.abs(fast - slow)) < 1e-12

    def test_bias_broadcast(self):
        x = np.zeros((1, 2, 2, 2))
        out = conv3d(x, np.zeros((2, 1, 3, 1, 1)), np.array([1.5, -2.0]))
        assert np.all(out[0] == 1.5) and np.all(out[1] == -2.0)

    def test_shape_errors_name_axis(self):
        x = rng().normal(size=(2, 3, 4, 4))
        with pytest.raises(ValueError, match="channel"):
            conv3d(x, np.zeros((3, 5, 3, 1, 1)), np.zeros(3))
        with pytest.raises(ValueError, match="kernel"):
            conv3d(x, np.zeros((3, 2, 2, 2, 2)), np.zeros(3))
        with pytest.raises(ValueError, match="bias"):
            conv3d(x, np.zeros((3, 2, 3, 1, 1)), np.zeros(4))

    def test_linearity(self):
        g = rng()
        x1 = g.normal(size=(2, 3, 4, 4))
        x2 = g.normal(size=(2, 3, 4, 4))
        k = g.normal(size=(2, 2, 1, 3, 3))
        zero_b = np.zeros(2)
        lhs = conv3d(2.0 * x1 + x2, k, zero_b)
        rhs = 2.0 * conv3d(x1, k, zero_b) + conv3d(x2, k, zero_b)
        assert np.max(np.abs(lhs - rhs)) < 1e-10


class TestMaxPool:
    def test_collapses_time(self):
        x = rng().normal(size=(3, 5, 2, 2))
        out = temporal_max_pool(x)
        assert out.shape == (3, 2, 2)
        assert np.array_equal(out, x.max(axis=1))

    def test_backward_routes_to_first_argmax(self):
        x = np.zeros((1, 3, 1, 1))
        x[0, 1, 0, 0] = 5.0
        x[0, 2, 0, 0] = 5.0  # tie: subgradient goes to the earlier frame
        grad = temporal_max_pool_backward(x, np.ones((1, 1, 1)))
        assert grad[0, 1, 0, 0] == 1.0
        assert grad[0, 2, 0, 0] == 0.0


class TestFuseStage:
    def test_zero_params_identity(self):
        g = rng()
        c = g.normal(size=(3, 4, 4))
        i = g.normal(size=(2, 5, 4, 4))
        out = fuse_stage(c, i, FusionParams.zeros(2, 4, 3))
        assert out is not c
        assert np.array_equal(out, c)

    def test_output_shape(self):
        g = rng()
        c = g.normal(size=(3, 6, 5))
        i = g.normal(size=(2, 4, 6, 5))
        params = FusionParams.random(2, 4, 3, g)
        assert fuse_stage(c, i, params).shape == (3, 6, 5)

    def test_channel_mismatch(self):
        g = rng()
        c = g.normal(size=(4, 4, 4))
        i = g.normal(size=(2, 3, 4, 4))
        with pytest.raises(ValueError):
            fuse_stage(c, i, FusionParams.zeros(2, 3, 3))


class TestGradients:
    def test_conv3d_backward_vs_finite_diff(self):
        assert finite_diff_check("conv3d_temporal", epsilon=1e-5, seed=1) < 1e-6
        assert finite_diff_check("conv3d_spatial", epsilon=1e-5, seed=1) < 1e-6

    def test_max_pool_backward_vs_finite_diff(self):
        assert finite_diff_check("temporal_max_pool", epsilon=1e-5, seed=2) < 1e-6

    def test_fuse_stage_backward_vs_finite_diff(self):
        assert finite_diff_check("fuse_stage", epsilon=1e-5, seed=3) < 1e-4

    def test_unknown_op(self):
        with pytest.raises(ValueError):
            finite_diff_check("nope")

    def test_epsilon_range(self):
        with pytest.raises(ValueError):
            finite_diff_check("fuse_stage", epsilon=1.0)

    def test_conv_backward_shapes(self):
        g = rng()
        x = g.normal(size=(2, 4, 3, 3))
        k = g.normal(size=(3, 2, 3, 1, 1))
        grad_out = g.normal(size=(3, 4, 3, 3))
        dx, dk, db = conv3d_backward(x, k, grad_out)
        assert dx.shape == x.shape and dk.shape == k.shape and db.shape == (3,)

    def test_fuse_backward_keys(self):
        g = rng()
        c = g.normal(size=(2, 4, 4))
        i = g.normal(size=(2, 3, 4, 4))
        params = FusionParams.random(2, 3, 2, g)
        grads = fuse_stage_backward(c, i, params, g.normal(size=(2, 4, 4)))
        assert set(grads) == {
            "c",
            "i",
            "temporal_kernel",
            "temporal_bias",
            "spatial_kernel",
            "spatial_bias",
        }


def test_check_suite_all_pass():
    results = run_check_suite(seed=0)
    assert len(results) >= 6
    assert all(passed for _, passed, _ in results)
