"""The standard finite-difference suite: every differentiable op, the
partial-convolution layer, and all five loss terms against I_out.

Shared by the ``gradcheck`` CLI command and the acceptance tests.  Probe
constants are frozen-seeded and kept at unit scale so the f32 forward pass
does not drown the central differences.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Tensor
from .gradcheck import check_gradients
from .losses import (FeatureConfig, FeatureNetwork, LossWeights,
                     hole_valid_losses, perceptual_loss, style_loss,
                     total_loss, tv_loss, _composite)
from .pconv import PartialConvLayer, pconv_forward


def _probe(shape, seed):
    return Tensor(np.random.default_rng(seed).standard_normal(shape)
                  .astype(np.float32))


def op_cases():
    """(name, build_loss, inits) for every registered differentiable op."""
    rng = np.random.default_rng(42)
    x = rng.standard_normal((1, 2, 5, 5)).astype(np.float32)
    y = rng.standard_normal((1, 2, 5, 5)).astype(np.float32)
    w = rng.standard_normal((3, 2, 3, 3)).astype(np.float32)
    b = rng.standard_normal((1, 3, 1, 1)).astype(np.float32)
    # keep |x| away from the relu/abs kinks for clean central differences
    xk = np.where(np.abs(x) < 0.05, 0.2, x).astype(np.float32)
    p22 = _probe((1, 2, 5, 5), 1)
    p35 = _probe((1, 3, 5, 5), 2)
    p4 = _probe((1, 4, 5, 5), 3)
    pool_x = rng.standard_normal((1, 2, 4, 4)).astype(np.float32)
    p_pool = _probe((1, 2, 2, 2), 4)
    p_up = _probe((1, 2, 10, 10), 5)
    a_mat = rng.standard_normal((2, 3, 4)).astype(np.float32)
    b_mat = rng.standard_normal((2, 4, 5)).astype(np.float32)
    p_mat = _probe((2, 3, 5), 6)

    cases = [
        ("add", lambda t, p: T.mean_all(T.mul(T.add(p["a"], p["b"]), p22)),
         {"a": x, "b": y}),
        ("sub", lambda t, p: T.mean_all(T.mul(T.sub(p["a"], p["b"]), p22)),
         {"a": x, "b": y}),
        ("mul", lambda t, p: T.mean_all(T.mul(T.mul(p["a"], p["b"]), p22)),
         {"a": x, "b": y}),
        ("scalar_mul", lambda t, p: T.mean_all(
            T.mul(T.scalar_mul(p["a"], 1.7), p22)), {"a": x}),
        ("relu", lambda t, p: T.mean_all(T.mul(T.relu(p["a"]), p22)),
         {"a": xk}),
        ("leaky_relu", lambda t, p: T.mean_all(
            T.mul(T.leaky_relu(p["a"], 0.2), p22)), {"a": xk}),
        ("abs_sum", lambda t, p: T.scalar_mul(T.abs_sum(p["a"]), 0.02),
         {"a": xk}),
        ("mean_abs", lambda t, p: T.mean_abs(p["a"]), {"a": xk}),
        ("concat_channels", lambda t, p: T.mean_all(
            T.mul(T.concat_channels([p["a"], p["b"]]), p4)),
         {"a": x, "b": y}),
        ("matmul", lambda t, p: T.mean_all(
            T.mul(T.matmul(p["a"], p["b"]), p_mat)),
         {"a": a_mat, "b": b_mat}),
        ("conv2d", lambda t, p: T.mean_all(T.mul(
            T.conv2d(p["x"], p["w"], bias=p["b"], padding=1), p35)),
         {"x": x, "w": w, "b": b}),
        ("maxpool2", lambda t, p: T.mean_all(
            T.mul(T.maxpool2(p["x"]), p_pool)), {"x": pool_x}),
        ("upsample2_bilinear", lambda t, p: T.mean_all(
            T.mul(T.upsample2(p["x"], "bilinear"), p_up)), {"x": x}),
        ("upsample2_nearest", lambda t, p: T.mean_all(
            T.mul(T.upsample2(p["x"], "nearest"), p_up)), {"x": x}),
        ("crop_spatial", lambda t, p: T.mean_all(
            T.crop_spatial(p["x"], 1, 4, 0, 3)), {"x": x}),
        ("reshape", lambda t, p: T.mean_all(
            T.mul(T.reshape(p["x"], (1, 1, 10, 5)),
                  _probe((1, 1, 10, 5), 7))), {"x": x}),
    ]

    mask = (np.random.default_rng(7).random((1, 1, 5, 5)) > 0.4) \
        .astype(np.float32)
    p_pc = _probe((1, 3, 5, 5), 8)

    def pconv_case(t, p):
        layer = PartialConvLayer(np.zeros((3, 2, 3, 3), np.float32),
                                 np.zeros(3, np.float32))
        layer.weight_t = p["w"]
        layer.bias_t = p["b"]
        out, _ = pconv_forward(p["x"], mask, layer)
        return T.mean_all(T.mul(out, p_pc))

    cases.append(("pconv", pconv_case, {"x": x, "w": w, "b": b}))
    return cases


def loss_cases():
    """All five losses plus the weighted total, against I_out, on 6x6."""
    rng = np.random.default_rng(2)
    i_gt = (0.25 + 0.2 * rng.random((1, 3, 6, 6))).astype(np.float32)
    i_out = (i_gt + 0.35 + 0.15 * rng.random((1, 3, 6, 6))).astype(np.float32)
    mask = (rng.random((1, 1, 6, 6)) > 0.3).astype(np.float32)
    net = FeatureNetwork(FeatureConfig(block_channels=((8, 8),)), seed=0)
    weights = LossWeights()
    return [
        ("loss_tv", lambda t, p: tv_loss(_composite(p["x"], i_gt, mask)),
         {"x": i_out}),
        ("loss_hole", lambda t, p: hole_valid_losses(p["x"], i_gt, mask)[0],
         {"x": i_out}),
        ("loss_valid", lambda t, p: hole_valid_losses(p["x"], i_gt, mask)[1],
         {"x": i_out}),
        ("loss_perceptual", lambda t, p: perceptual_loss(
            p["x"], _composite(p["x"], i_gt, mask), i_gt, net), {"x": i_out}),
        ("loss_style", lambda t, p: style_loss(
            p["x"], _composite(p["x"], i_gt, mask), i_gt, net), {"x": i_out}),
        ("loss_total", lambda t, p: total_loss(
            p["x"], i_gt, mask, net, weights)[0], {"x": i_out}),
    ]


def run_gradient_suite():
    """Yields (case_name, worst excess beyond atol+rtol*|fd|); <= 0 passes."""
    for name, build, inits in op_cases() + loss_cases():
        report = check_gradients(build, inits)
        for pname, excess in report.items():
            yield f"{name}.{pname}", excess
