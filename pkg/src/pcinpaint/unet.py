"""Partial-convolution UNet: mirrored encoder/decoder stacks with skips.

Every encoder level runs two partial convolutions (each followed by ReLU)
and then 2x2 max pooling on both features and mask; every decoder level
bilinear-upsamples features, nearest-upsamples the mask, concatenates the
same-level encoder output (features and mask), and runs two partial
convolutions with LeakyReLU.  The topmost decoder is linear and maps back
to 3 channels.  Spatial size at level i is exactly (H/2^(i-1), W/2^(i-1)),
so skips concatenate without cropping.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .tensor import GradTape, Tensor, TensorError
from .pconv import PartialConvLayer, pconv_forward

DEFAULT_CHANNELS = (64, 128, 256, 512, 512, 512, 512)
DEFAULT_KERNELS = (7, 5, 3, 3, 3, 3, 3)


@dataclass
class UNetConfig:
    depth: int = 7
    encoder_channels: tuple = DEFAULT_CHANNELS
    kernel_sizes: tuple = DEFAULT_KERNELS
    leaky_slope: float = 0.2
    in_channels: int = 3
    out_channels: int = 3
    # topmost decoder: if True both convs are linear, else only the last
    linear_top_both: bool = True
    # decoders use partial convolutions; False switches them to plain convs
    decoder_pconv: bool = True

    def __post_init__(self):
        if self.depth < 1:
            raise TensorError("depth must be >= 1")
        self.encoder_channels = tuple(self.encoder_channels)[: self.depth]
        self.kernel_sizes = tuple(self.kernel_sizes)[: self.depth]
        if len(self.encoder_channels) != self.depth:
            raise TensorError("encoder_channels shorter than depth")
        if len(self.kernel_sizes) != self.depth:
            raise TensorError("kernel_sizes shorter than depth")
        if any(k % 2 == 0 for k in self.kernel_sizes):
            raise TensorError("kernel sizes must be odd")
        # canonical f32 so save/load round trips compare equal
        self.leaky_slope = float(np.float32(self.leaky_slope))

    @property
    def divisor(self):
        """Input spatial dims must be divisible by this (one pool per level)."""
        return 2 ** self.depth

    def layer_plan(self):
        """(name, in_c, out_c, k) for every conv layer, in forward order."""
        plan = []
        prev = self.in_channels
        for i in range(1, self.depth + 1):
            ch, k = self.encoder_channels[i - 1], self.kernel_sizes[i - 1]
            plan.append((f"enc{i}.conva", prev, ch, k))
            plan.append((f"enc{i}.convb", ch, ch, k))
            prev = ch
        for i in range(self.depth, 0, -1):
            skip = self.encoder_channels[i - 1]
            k = self.kernel_sizes[i - 1]
            mid = self.encoder_channels[max(i - 2, 0)]
            out = self.out_channels if i == 1 else mid
            plan.append((f"dec{i}.conva", prev + skip, mid, k))
            plan.append((f"dec{i}.convb", mid, out, k))
            prev = out
        return plan


class UNetModel:
    """Named parameter store plus the forward graph."""

    def __init__(self, config, params=None, seed=0):
        self.config = config
        self.params = params if params is not None else _init_params(config, seed)
        expected = {f"{n}.{s}" for n, _, _, _ in config.layer_plan()
                    for s in ("weight", "bias")}
        if set(self.params) != expected:
            missing = expected - set(self.params)
            extra = set(self.params) - expected
            raise TensorError(
                f"parameter names mismatch: missing={sorted(missing)} "
                f"unexpected={sorted(extra)}")

    def layer(self, name, tape=None):
        """Build a PartialConvLayer, optionally with taped parameters."""
        w = self.params[f"{name}.weight"]
        b = self.params[f"{name}.bias"]
        layer = PartialConvLayer(w, b)
        if tape is not None:
            layer.weight_t = tape.parameter(f"{name}.weight", w)
            layer.bias_t = tape.parameter(
                f"{name}.bias", b.reshape(1, -1, 1, 1))
        return layer


def _init_params(config, seed):
    """Kaiming-uniform fan-in init for weights, zero bias, seeded."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    params = {}
    for name, in_c, out_c, k in config.layer_plan():
        fan_in = in_c * k * k
        bound = np.sqrt(6.0 / fan_in)
        params[f"{name}.weight"] = rng.uniform(
            -bound, bound, (out_c, in_c, k, k)).astype(np.float32)
        params[f"{name}.bias"] = np.zeros(out_c, dtype=np.float32)
    return params


def _check_input(config, image, mask_data):
    n, c, h, w = image.shape
    if c != config.in_channels:
        raise TensorError(
            f"expected {config.in_channels}-channel input, got {c}")
    d = config.divisor
    if h % d or w % d:
        raise TensorError(
            f"spatial dims {h}x{w} must be divisible by {d}")
    if mask_data.shape != (n, 1, h, w):
        raise TensorError(
            f"mask shape {mask_data.shape}, expected {(n, 1, h, w)}")


def unet_forward(model, image, mask, tape=None, collect_sizes=None):
    """Run the network; returns (output, final single-channel mask ndarray).

    ``image`` holes are expected pre-zeroed (pconv masks them regardless).
    When ``tape`` is given, every conv parameter is registered on it so the
    caller can backprop a loss.  ``collect_sizes``, if a list, receives
    (level, h, w) for every encoder/decoder stage, for invariant checks.
    """
    cfg = model.config
    x = image if isinstance(image, Tensor) else Tensor(image)
    m = mask.data if isinstance(mask, Tensor) else np.asarray(
        mask, dtype=np.float32)
    _check_input(cfg, x, m)

    skips = []  # (features, mask) per level, pre-pool
    for i in range(1, cfg.depth + 1):
        if collect_sizes is not None:
            collect_sizes.append((i, x.shape[2], x.shape[3]))
        x, m = pconv_forward(x, m, model.layer(f"enc{i}.conva", tape))
        x = T.relu(x)
        x, m = pconv_forward(x, m, model.layer(f"enc{i}.convb", tape))
        x = T.relu(x)
        skips.append((x, m))
        x = T.maxpool2(x)
        m = _pool_mask(m)

    for i in range(cfg.depth, 0, -1):
        x = T.upsample2(x, "bilinear")
        m = np.repeat(np.repeat(m, 2, axis=2), 2, axis=3)  # nearest
        skip_x, skip_m = skips[i - 1]
        up_c, skip_c = x.shape[1], skip_x.shape[1]
        x = T.concat_channels([x, skip_x])
        m = np.concatenate([np.repeat(m, up_c, axis=1),
                            np.repeat(skip_m, skip_c, axis=1)], axis=1)
        if collect_sizes is not None:
            collect_sizes.append((i, x.shape[2], x.shape[3]))
        linear = cfg.linear_top_both and i == 1
        x, m = _dec_conv(model, f"dec{i}.conva", x, m, tape)
        if not linear:
            x = T.leaky_relu(x, cfg.leaky_slope)
        x, m = _dec_conv(model, f"dec{i}.convb", x, m, tape)
        if i != 1 and not linear:
            x = T.leaky_relu(x, cfg.leaky_slope)
    return x, m


def _dec_conv(model, name, x, m, tape):
    cfg = model.config
    if cfg.decoder_pconv:
        return pconv_forward(x, m, model.layer(name, tape))
    layer = model.layer(name, tape)
    wt = getattr(layer, "weight_t", None)
    bt = getattr(layer, "bias_t", None)
    if wt is None:
        wt = Tensor(layer.weight)
    if bt is None:
        bt = Tensor(layer.bias.reshape(1, -1, 1, 1))
    out = T.conv2d(x, wt, bias=bt, padding=layer.padding)
    from .pconv import mask_update
    return out, mask_update(m.max(axis=1, keepdims=True), layer.kernel)


def _pool_mask(m):
    """2x2 any-valid pooling of a binary mask."""
    n, c, h, w = m.shape
    return m.reshape(n, c, h // 2, 2, w // 2, 2).max(axis=(3, 5))


def composite(output, image_gt, mask):
    """Replace non-hole pixels of the network output by ground truth."""
    out = output if isinstance(output, Tensor) else Tensor(output)
    gt = image_gt if isinstance(image_gt, Tensor) else Tensor(image_gt)
    md = mask.data if isinstance(mask, Tensor) else np.asarray(
        mask, dtype=np.float32)
    if out.shape != gt.shape:
        raise TensorError(f"shape mismatch {out.shape} vs {gt.shape}")
    mt = Tensor(md)
    inv = Tensor(1.0 - md)
    return T.add(T.mul(mt, gt), T.mul(inv, out))
