"""Toy-scale temporal aggregation fusion.

A clip tensor (C, T, H, W) is fused into a frame tensor (C, H, W) by
``fuse_stage(c, i) = c + N(i)`` where the small fusion network N is, in fixed
order: a 3x1x1 temporal convolution, ReLU, a 1x3x3 spatial convolution, and a
max pool over the temporal axis. Convolutions are stride-1 cross-correlations
with "same" zero padding. Forward passes have matching analytic backward
passes verified against central finite differences; there is no training
loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FusionParams",
    "conv3d",
    "conv3d_naive",
    "conv3d_backward",
    "temporal_max_pool",
    "temporal_max_pool_backward",
    "fuse_stage",
    "fuse_stage_backward",
    "finite_diff_check",
    "run_check_suite",
]

_ALLOWED_KERNELS = ((3, 1, 1), (1, 3, 3))


@dataclass(frozen=True)
class FusionParams:
    """Weights of the fusion network N.

    temporal_kernel: (C_mid, C_in, 3, 1, 1), spatial_kernel: (C_out, C_mid, 1, 3, 3).
    """

    temporal_kernel: np.ndarray
    temporal_bias: np.ndarray
    spatial_kernel: np.ndarray
    spatial_bias: np.ndarray

    def __post_init__(self):
        tk, sk = self.temporal_kernel, self.spatial_kernel
        if tk.ndim != 5 or tk.shape[2:] != (3, 1, 1):
            raise ValueError(f"temporal kernel must be (C_mid, C_in, 3, 1, 1), got {tk.shape}")
        if sk.ndim != 5 or sk.shape[2:] != (1, 3, 3):
            raise ValueError(f"spatial kernel must be (C_out, C_mid, 1, 3, 3), got {sk.shape}")
        if sk.shape[1] != tk.shape[0]:
            raise ValueError(
                f"channel mismatch between stages: temporal outputs {tk.shape[0]}, "
                f"spatial expects {sk.shape[1]}"
            )
        if self.temporal_bias.shape != (tk.shape[0],):
            raise ValueError(f"temporal bias must be ({tk.shape[0]},), got {self.temporal_bias.shape}")
        if self.spatial_bias.shape != (sk.shape[0],):
            raise ValueError(f"spatial bias must be ({sk.shape[0]},), got {self.spatial_bias.shape}")

    @classmethod
    def zeros(cls, channels_in: int, channels_mid: int, channels_out: int) -> "FusionParams":
        return cls(
            temporal_kernel=np.zeros((channels_mid, channels_in, 3, 1, 1)),
            temporal_bias=np.zeros(channels_mid),
            spatial_kernel=np.zeros((channels_out, channels_mid, 1, 3, 3)),
            spatial_bias=np.zeros(channels_out),
        )

    @classmethod
    def random(
        cls, channels_in: int, channels_mid: int, channels_out: int, rng: np.random.Generator
    ) -> "FusionParams":
        return cls(
            temporal_kernel=rng.normal(0, 0.5, (channels_mid, channels_in, 3, 1, 1)),
            temporal_bias=rng.normal(0, 0.5, channels_mid),
            spatial_kernel=rng.normal(0, 0.5, (channels_out, channels_mid, 1, 3, 3)),
            spatial_bias=rng.normal(0, 0.5, channels_out),
        )


def _check_conv_args(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> None:
    if x.ndim != 4:
        raise ValueError(f"input must be (C, T, H, W), got shape {x.shape}")
    if kernel.ndim != 5:
        raise ValueError(f"kernel must be (C_out, C_in, kt, kh, kw), got shape {kernel.shape}")
    if kernel.shape[2:] not in _ALLOWED_KERNELS:
        raise ValueError(
            f"kernel spatial shape must be one of {_ALLOWED_KERNELS}, got {kernel.shape[2:]}"
        )
    if kernel.shape[1] != x.shape[0]:
        raise ValueError(
            f"channel axis mismatch: input has {x.shape[0]}, kernel expects {kernel.shape[1]}"
        )
    if bias.shape != (kernel.shape[0],):
        raise ValueError(f"bias must have shape ({kernel.shape[0]},), got {bias.shape}")


def conv3d(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Stride-1 same-padded cross-correlation over (T, H, W) with channel mixing."""
    _check_conv_args(x, kernel, bias)
    c_out = kernel.shape[0]
    kt, kh, kw = kernel.shape[2:]
    pt, ph, pw = kt // 2, kh // 2, kw // 2
    padded = np.pad(x, ((0, 0), (pt, pt), (ph, ph), (pw, pw)))
    _, t, h, w = x.shape
    out = np.zeros((c_out, t, h, w))
    for dt in range(kt):
        for dh in range(kh):
            for dw in range(kw):
                window = padded[:, dt : dt + t, dh : dh + h, dw : dw + w]
                taps = kernel[:, :, dt, dh, dw]  # (C_out, C_in)
                out += np.einsum("oc,cthw->othw", taps, window)
    return out + bias[:, None, None, None]


def conv3d_naive(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Direct nested-loop reference; the test oracle for conv3d."""
    _check_conv_args(x, kernel, bias)
    c_in, t, h, w = x.shape
    c_out = kernel.shape[0]
    kt, kh, kw = kernel.shape[2:]
    pt, ph, pw = kt // 2, kh // 2, kw // 2
    out = np.zeros((c_out, t, h, w))
    for o in range(c_out):
        for tt in range(t):
            for hh in range(h):
                for ww in range(w):
                    acc = float(bias[o])
                    for c in range(c_in):
                        for dt in range(kt):
                            for dh in range(kh):
                                for dw in range(kw):
                                    st = tt + dt - pt
                                    sh = hh + dh - ph
                                    sw = ww + dw - pw
                                    if 0 <= st < t and 0 <= sh < h and 0 <= sw < w:
                                        acc += float(kernel[o, c, dt, dh, dw]) * float(
                                            x[c, st, sh, sw]
                                        )
                    out[o, tt, hh, ww] = acc
    return out


def conv3d_backward(
    x: np.ndarray, kernel: np.ndarray, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (d_input, d_kernel, d_bias) for an upstream gradient."""
    c_out = kernel.shape[0]
    kt, kh, kw = kernel.shape[2:]
    pt, ph, pw = kt // 2, kh // 2, kw // 2
    _, t, h, w = x.shape
    padded = np.pad(x, ((0, 0), (pt, pt), (ph, ph), (pw, pw)))
    d_padded = np.zeros_like(padded)
    d_kernel = np.zeros_like(kernel)
    for dt in range(kt):
        for dh in range(kh):
            for dw in range(kw):
                window = padded[:, dt : dt + t, dh : dh + h, dw : dw + w]
                d_kernel[:, :, dt, dh, dw] = np.einsum("othw,cthw->oc", grad_out, window)
                taps = kernel[:, :, dt, dh, dw]
                d_padded[:, dt : dt + t, dh : dh + h, dw : dw + w] += np.einsum(
                    "oc,othw->cthw", taps, grad_out
                )
    d_input = d_padded[:, pt : pt + t, ph : ph + h, pw : pw + w]
    d_bias = grad_out.sum(axis=(1, 2, 3))
    return d_input, d_kernel, d_bias


def temporal_max_pool(x: np.ndarray) -> np.ndarray:
    """Channel-wise maximum over the temporal axis: (C, T, H, W) -> (C, H, W)."""
    if x.ndim != 4:
        raise ValueError(f"input must be (C, T, H, W), got shape {x.shape}")
    if x.shape[1] < 1:
        raise ValueError("temporal axis must be non-empty")
    return x.max(axis=1)


def temporal_max_pool_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    """Subgradient routing upstream values to the first attaining time index."""
    t = x.shape[1]
    attaining = x.argmax(axis=1)  # first max along T
    d_input = np.zeros_like(x)
    one_hot = (np.arange(t)[None, :, None, None] == attaining[:, None, :, :])
    d_input += one_hot * grad_out[:, None, :, :]
    return d_input


def fuse_stage(c: np.ndarray, i: np.ndarray, params: FusionParams) -> np.ndarray:
    """f = c + max_pool_t(spatial_conv(relu(temporal_conv(i))))."""
    if c.ndim != 3:
        raise ValueError(f"frame features must be (C, H, W), got shape {c.shape}")
    branch = _fusion_branch(i, params)[-1]
    if branch.shape != c.shape:
        raise ValueError(
            f"fusion branch shape {branch.shape} does not match frame features {c.shape}"
        )
    return c + branch


def _fusion_branch(i: np.ndarray, params: FusionParams):
    z1 = conv3d(i, params.temporal_kernel, params.temporal_bias)
    a1 = np.maximum(z1, 0.0)
    z2 = conv3d(a1, params.spatial_kernel, params.spatial_bias)
    pooled = temporal_max_pool(z2)
    return z1, a1, z2, pooled


def fuse_stage_backward(
    c: np.ndarray, i: np.ndarray, params: FusionParams, grad_out: np.ndarray
) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss wrt every input and parameter of fuse_stage."""
    z1, a1, z2, _ = _fusion_branch(i, params)
    d_z2 = temporal_max_pool_backward(z2, grad_out)
    d_a1, d_sk, d_sb = conv3d_backward(a1, params.spatial_kernel, d_z2)
    d_z1 = d_a1 * (z1 > 0.0)
    d_i, d_tk, d_tb = conv3d_backward(i, params.temporal_kernel, d_z1)
    return {
        "c": grad_out.copy(),
        "i": d_i,
        "temporal_kernel": d_tk,
        "temporal_bias": d_tb,
        "spatial_kernel": d_sk,
        "spatial_bias": d_sb,
    }


def _central_diff(f, arr: np.ndarray, epsilon: float) -> np.ndarray:
    grad = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + epsilon
        up = f()
        flat[k] = orig - epsilon
        down = f()
        flat[k] = orig
        gflat[k] = (up - down) / (2.0 * epsilon)
    return grad


def _max_rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1.0)
    return float(np.max(np.abs(analytic - numeric) / denom))


def finite_diff_check(op: str, epsilon: float = 1e-5, seed: int = 0) -> float:
    """Max relative error between analytic and central-difference gradients.

    The scalar loss is the sum of the op's output. ``op`` is one of
    "conv3d_temporal", "conv3d_spatial", "temporal_max_pool", "fuse_stage".
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise ValueError(f"epsilon must be in [1e-7, 1e-3], got {epsilon}")
    rng = np.random.default_rng(seed)
    if op in ("conv3d_temporal", "conv3d_spatial"):
        shape = (3, 1, 1) if op == "conv3d_temporal" else (1, 3, 3)
        x = rng.normal(size=(2, 4, 5, 5))
        kernel = rng.normal(size=(3, 2, *shape))
        bias = rng.normal(size=3)
        d_input, d_kernel, d_bias = conv3d_backward(
            x, kernel, np.ones((3, 4, 5, 5))
        )
        worst = 0.0
        for analytic, arr in ((d_input, x), (d_kernel, kernel), (d_bias, bias)):
            numeric = _central_diff(lambda: conv3d(x, kernel, bias).sum(), arr, epsilon)
            worst = max(worst, _max_rel_err(analytic, numeric))
        return worst
    if op == "temporal_max_pool":
        # widely spaced values keep the pool away from ties
        x = rng.permutation(np.arange(2 * 4 * 3 * 3, dtype=float)).reshape(2, 4, 3, 3)
        analytic = temporal_max_pool_backward(x, np.ones((2, 3, 3)))
        numeric = _central_diff(lambda: temporal_max_pool(x).sum(), x, epsilon)
        return _max_rel_err(analytic, numeric)
    if op == "fuse_stage":
        c = rng.normal(size=(3, 5, 5))
        i = rng.normal(size=(2, 4, 5, 5))
        params = FusionParams.random(2, 4, 3, rng)
        grads = fuse_stage_backward(c, i, params, np.ones((3, 5, 5)))
        arrays = {
            "c": c,
            "i": i,
            "temporal_kernel": params.temporal_kernel,
            "temporal_bias": params.temporal_bias,
            "spatial_kernel": params.spatial_kernel,
            "spatial_bias": params.spatial_bias,
        }
        worst = 0.0
        for name, arr in arrays.items():
            numeric = _central_diff(lambda: fuse_stage(c, i, params).sum(), arr, epsilon)
            worst = max(worst, _max_rel_err(grads[name], numeric))
        return worst
    raise ValueError(f"unknown op {op!r}")


def run_check_suite(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Invariant and gradient checks behind the `tan-check` command."""
    rng = np.random.default_rng(seed)
    checks: list[tuple[str, bool, str]] = []

    x = rng.normal(size=(2, 3, 4, 4))
    y = rng.normal(size=(2, 3, 4, 4))
    kernel = rng.normal(size=(3, 2, 3, 1, 1))
    zero_bias = np.zeros(3)
    lin = conv3d(2.0 * x + 3.0 * y, kernel, zero_bias)
    lin_ref = 2.0 * conv3d(x, kernel, zero_bias) + 3.0 * conv3d(y, kernel, zero_bias)
    err = float(np.max(np.abs(lin - lin_ref)))
    checks.append(("conv3d linearity", err < 1e-10, f"max abs err {err:.3e}"))

    worst = 0.0
    for trial in range(5):
        trial_rng = np.random.default_rng(1000 + trial)
        shape = (3, 1, 1) if trial % 2 == 0 else (1, 3, 3)
        xx = trial_rng.normal(size=(2, 3, 4, 4))
        kk = trial_rng.normal(size=(2, 2, *shape))
        bb = trial_rng.normal(size=2)
        worst = max(worst, float(np.max(np.abs(conv3d(xx, kk, bb) - conv3d_naive(xx, kk, bb)))))
    checks.append(("conv3d matches naive oracle", worst < 1e-12, f"max abs err {worst:.3e}"))

    c = rng.normal(size=(3, 4, 4))
    i = rng.normal(size=(2, 3, 4, 4))
    zero = FusionParams.zeros(2, 4, 3)
    identity = bool(np.array_equal(fuse_stage(c, i, zero), c))
    checks.append(("zero-parameter fusion returns frame features", identity, "bit-exact"))

    e1 = finite_diff_check("conv3d_temporal")
    checks.append(("conv3d gradient (finite differences)", e1 < 1e-6, f"max rel err {e1:.3e}"))
    e2 = finite_diff_check("temporal_max_pool")
    checks.append(("max-pool gradient (finite differences)", e2 < 1e-6, f"max rel err {e2:.3e}"))
    e3 = finite_diff_check("fuse_stage")
    checks.append(("fuse_stage gradient (finite differences)", e3 < 1e-4, f"max rel err {e3:.3e}"))
    return checks
