"""Partial convolution layer with mask update, plus a brute-force oracle.

A partial convolution computes each output from the valid pixels only and
renormalizes by sum(1)/sum(M), where sum(1) counts the full window footprint
(including zero-padded positions) and sum(M) counts the mask ones inside the
window.  Output locations whose window holds no valid pixel emit 0, and the
updated (single-channel) mask marks a location valid iff its window saw at
least one valid pixel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import tensor as T
from .tensor import Tensor, TensorError


@dataclass
class PartialConvLayer:
    """Weights of one partial-convolution layer.

    weight: (out_c, in_c, k, k), k odd; bias: (out_c,).  Padding is fixed to
    (k-1)/2 so spatial size is preserved.
    """

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float32)
        self.bias = np.asarray(self.bias, dtype=np.float32)
        oc, ic, k, k2 = self.weight.shape
        if k != k2 or k % 2 == 0:
            raise TensorError(f"kernel must be square and odd, got {k}x{k2}")
        if self.bias.shape != (oc,):
            raise TensorError(
                f"bias shape {self.bias.shape} does not match out_c={oc}")
        if not (np.isfinite(self.weight).all() and np.isfinite(self.bias).all()):
            raise TensorError("layer parameters must be finite")

    @property
    def kernel(self):
        return self.weight.shape[2]

    @property
    def padding(self):
        return (self.kernel - 1) // 2


def _check_mask(mask_data, x_shape):
    if not np.isin(mask_data, (0.0, 1.0)).all():
        raise TensorError("mask values must be exactly 0 or 1")
    n, c, h, w = x_shape
    mn, mc, mh, mw = mask_data.shape
    if (mn, mh, mw) != (n, h, w) or mc not in (1, c):
        raise TensorError(
            f"mask shape {mask_data.shape} incompatible with input {x_shape}")


def _window_counts(mask_data, in_c, k):
    """Per-window valid count of the channel-replicated mask, zero padded."""
    n, mc, h, w = mask_data.shape
    p = (k - 1) // 2
    mp = np.pad(mask_data.sum(axis=1, keepdims=True),
                ((0, 0), (0, 0), (p, p), (p, p)))
    win = sliding_window_view(mp, (k, k), axis=(2, 3))
    counts = win.sum(axis=(-1, -2), dtype=np.float64)[:, 0]  # n,h,w
    if mc == 1:
        counts = counts * in_c
    return counts[:, None]  # n,1,h,w


def pconv_forward(x, mask, layer):
    """Partial convolution forward pass.

    ``x`` may be a Tensor (gradients flow to it if taped); ``mask`` is a
    binary ndarray or Tensor of shape (n,1,h,w) or (n,c,h,w) and is treated
    as a constant.  Returns (features, updated single-channel mask ndarray).

    ``weight_t``/``bias_t`` on the layer may be taped Tensors registered by
    the caller; otherwise the layer's raw arrays are used as constants.
    """
    xt = x if isinstance(x, Tensor) else Tensor(x)
    mask_data = mask.data if isinstance(mask, Tensor) else np.asarray(
        mask, dtype=np.float32)
    _check_mask(mask_data, xt.shape)
    in_c, k = xt.shape[1], layer.kernel

    counts = _window_counts(mask_data, in_c, k)
    valid = (counts > 0).astype(np.float32)
    scale = np.divide(in_c * k * k, counts, out=np.zeros_like(counts),
                      where=counts > 0).astype(np.float32)

    wt = getattr(layer, "weight_t", None)
    bt = getattr(layer, "bias_t", None)
    if wt is None:
        wt = Tensor(layer.weight)
    if bt is None:
        bt = Tensor(layer.bias.reshape(1, -1, 1, 1))
    masked = T.mul(xt, Tensor(mask_data))
    raw = T.conv2d(masked, wt, bias=None, padding=layer.padding)
    # scale is 0 on fully-masked windows, so those outputs stay 0 and the
    # bias is gated by the validity indicator
    out = T.add(T.mul(raw, Tensor(scale)), T.mul(bt, Tensor(valid)))
    return out, valid


def pconv_oracle(x, mask, layer):
    """Literal per-window scalar reimplementation; the correctness oracle.

    Shares no kernels with the tensor engine: seven nested python loops.
    """
    xd = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float32)
    md = mask.data if isinstance(mask, Tensor) else np.asarray(
        mask, dtype=np.float32)
    _check_mask(md, xd.shape)
    n, c, h, w = xd.shape
    if md.shape[1] == 1:
        md = np.repeat(md, c, axis=1)
    oc, _, k, _ = layer.weight.shape
    p = (k - 1) // 2
    out = np.zeros((n, oc, h, w), dtype=np.float32)
    mout = np.zeros((n, 1, h, w), dtype=np.float32)
    sum_ones = float(c * k * k)
    for b in range(n):
        for oy in range(h):
            for ox in range(w):
                msum = 0.0
                for ch in range(c):
                    for ky in range(k):
                        for kx in range(k):
                            iy, ix = oy + ky - p, ox + kx - p
                            if 0 <= iy < h and 0 <= ix < w:
                                msum += float(md[b, ch, iy, ix])
                if msum == 0.0:
                    continue
                mout[b, 0, oy, ox] = 1.0
                for o in range(oc):
                    acc = 0.0
                    for ch in range(c):
                        for ky in range(k):
                            for kx in range(k):
                                iy, ix = oy + ky - p, ox + kx - p
                                if 0 <= iy < h and 0 <= ix < w:
                                    acc += (float(layer.weight[o, ch, ky, kx])
                                            * float(xd[b, ch, iy, ix])
                                            * float(md[b, ch, iy, ix]))
                    out[b, o, oy, ox] = np.float32(
                        acc * sum_ones / msum + float(layer.bias[o]))
    return out, mout


def mask_update(mask, k):
    """Binary dilation of a mask by a k x k window (any-valid rule)."""
    md = mask.data if isinstance(mask, Tensor) else np.asarray(
        mask, dtype=np.float32)
    if not np.isin(md, (0.0, 1.0)).all():
        raise TensorError("mask values must be exactly 0 or 1")
    p = (k - 1) // 2
    if p == 0:
        return md.copy()
    mp = np.pad(md, ((0, 0), (0, 0), (p, p), (p, p)))
    win = sliding_window_view(mp, (k, k), axis=(2, 3))
    return win.max(axis=(-1, -2))
