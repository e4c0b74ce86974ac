"""Inpainting loss terms: TV, perceptual, style (Gram), hole/valid pixel
losses, and their weighted total.

All reductions are means over the full element count, so the weights are
resolution-independent.  The feature network is a frozen VGG-style conv
stack; gradients flow through it to the images but never into its weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .tensor import Tensor, TensorError

VGG_BLOCKS = ((64, 64), (128, 128), (256, 256, 256))
SLIM_BLOCKS = ((8, 8), (16, 16), (32, 32))


@dataclass
class LossWeights:
    tv: float = 0.1
    valid: float = 1.0
    hole: float = 6.0
    perceptual: float = 0.05
    style: float = 120.0
    use_perceptual: bool = True
    use_style: bool = True

    def __post_init__(self):
        for name in ("tv", "valid", "hole", "perceptual", "style"):
            if getattr(self, name) < 0:
                raise TensorError(f"loss weight {name} must be >= 0")


@dataclass
class FeatureConfig:
    """VGG-16-style stack: 3x3 convs + 2x2 pools, one tap after each pool."""

    block_channels: tuple = VGG_BLOCKS
    in_channels: int = 3
    mean: tuple = (0.485, 0.456, 0.406)
    std: tuple = (0.229, 0.224, 0.225)
    # multiplier on the weight init; smaller values damp the deep taps and
    # with them the style/perceptual magnitudes relative to the pixel terms
    init_scale: float = 1.0


class FeatureNetwork:
    """Frozen feature extractor emitting one activation map per block."""

    def __init__(self, config=None, params=None, seed=0):
        self.config = config or FeatureConfig()
        self.params = params if params is not None else \
            _init_feature_params(self.config, seed)
        expected = set(self.param_names(self.config))
        if set(self.params) != expected:
            raise TensorError(
                f"feature weights mismatch: missing={sorted(expected - set(self.params))} "
                f"unexpected={sorted(set(self.params) - expected)}")
        cfg = self.config
        self._mean = Tensor(np.asarray(cfg.mean, np.float32).reshape(1, -1, 1, 1))
        self._inv_std = Tensor(
            (1.0 / np.asarray(cfg.std, np.float32)).reshape(1, -1, 1, 1))

    @staticmethod
    def param_names(config):
        names = []
        for b, block in enumerate(config.block_channels, start=1):
            for j in range(1, len(block) + 1):
                names.append(f"feat.block{b}.conv{j}.weight")
                names.append(f"feat.block{b}.conv{j}.bias")
        return names

    @property
    def num_taps(self):
        return len(self.config.block_channels)

    def features(self, x):
        """Tap activations, one per block, strictly shrinking spatially."""
        x = x if isinstance(x, Tensor) else Tensor(x)
        x = T.mul(T.sub(x, self._mean), self._inv_std)
        taps = []
        for b, block in enumerate(self.config.block_channels, start=1):
            for j in range(1, len(block) + 1):
                w = Tensor(self.params[f"feat.block{b}.conv{j}.weight"])
                bias = Tensor(
                    self.params[f"feat.block{b}.conv{j}.bias"].reshape(1, -1, 1, 1))
                x = T.relu(T.conv2d(x, w, bias=bias, padding=1))
            x = T.maxpool2(x)
            taps.append(x)
        return taps


class IdentityFeatures:
    """Single-tap pass-through feature 'network', used by oracle tests."""

    num_taps = 1

    def features(self, x):
        return [x if isinstance(x, Tensor) else Tensor(x)]


def _init_feature_params(config, seed):
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x7C1]))
    params = {}
    prev = config.in_channels
    for b, block in enumerate(config.block_channels, start=1):
        for j, ch in enumerate(block, start=1):
            fan_in = prev * 9
            bound = config.init_scale * np.sqrt(6.0 / fan_in)
            params[f"feat.block{b}.conv{j}.weight"] = rng.uniform(
                -bound, bound, (ch, prev, 3, 3)).astype(np.float32)
            params[f"feat.block{b}.conv{j}.bias"] = np.zeros(ch, np.float32)
            prev = ch
    return params


# ---------------------------------------------------------------------------
# loss terms

def tv_loss(i_comp):
    """Anisotropic total variation, mean form (sum of |adjacent diffs| over
    the element count of the image)."""
    x = i_comp if isinstance(i_comp, Tensor) else Tensor(i_comp)
    n, c, h, w = x.shape
    total = None
    if w > 1:
        dx = T.sub(T.crop_spatial(x, 0, None, 1, None),
                   T.crop_spatial(x, 0, None, 0, w - 1))
        total = T.abs_sum(dx)
    if h > 1:
        dy = T.sub(T.crop_spatial(x, 1, None, 0, None),
                   T.crop_spatial(x, 0, h - 1, 0, None))
        sy = T.abs_sum(dy)
        total = sy if total is None else T.add(total, sy)
    if total is None:
        return T.sum_all(T.scalar_mul(x, 0.0))
    return T.scalar_mul(total, 1.0 / x.data.size)


def perceptual_loss(i_out, i_comp, i_gt, net):
    """Per-tap mean-absolute feature distance, out and comp branches."""
    f_out = net.features(i_out)
    f_comp = net.features(i_comp)
    f_gt = net.features(_constant(i_gt))
    total = None
    for fo, fc, fg in zip(f_out, f_comp, f_gt):
        term = T.add(T.mean_abs(T.sub(fo, fg)), T.mean_abs(T.sub(fc, fg)))
        total = term if total is None else T.add(total, term)
    return total


def gram(features):
    """Per-sample channel Gram matrix K * F F^T with K = 1/(C*h*w)."""
    f = features if isinstance(features, Tensor) else Tensor(features)
    n, c, h, w = f.shape
    fr = T.reshape(f, (n, c, h * w))
    g = T.matmul(fr, T.transpose_last2(fr))
    return T.scalar_mul(g, 1.0 / (c * h * w))


def style_loss(i_out, i_comp, i_gt, net):
    """Per-tap mean-absolute Gram distance, out and comp branches."""
    f_out = net.features(i_out)
    f_comp = net.features(i_comp)
    f_gt = net.features(_constant(i_gt))
    total = None
    for fo, fc, fg in zip(f_out, f_comp, f_gt):
        gg = gram(fg)
        term = T.add(T.mean_abs(T.sub(gram(fo), gg)),
                     T.mean_abs(T.sub(gram(fc), gg)))
        total = term if total is None else T.add(total, term)
    return total


def hole_valid_losses(i_out, i_gt, mask):
    """Mean |masked difference| over the full element count, for the hole
    region (1-M) and the valid region (M)."""
    out = i_out if isinstance(i_out, Tensor) else Tensor(i_out)
    gt = _constant(i_gt)
    md = mask.data if isinstance(mask, Tensor) else np.asarray(
        mask, dtype=np.float32)
    diff = T.sub(out, gt)
    l_hole = T.mean_abs(T.mul(diff, Tensor(1.0 - md)))
    l_valid = T.mean_abs(T.mul(diff, Tensor(md)))
    return l_hole, l_valid


def total_loss(i_out, i_gt, mask, net, weights):
    """Weighted sum of all enabled terms.

    Returns (scalar Tensor, breakdown dict of floats).  Disabled terms are
    skipped entirely, not just zero-weighted.
    """
    i_comp = _composite(i_out, i_gt, mask)
    l_hole, l_valid = hole_valid_losses(i_out, i_gt, mask)
    terms = {
        "tv": (weights.tv, tv_loss(i_comp)),
        "valid": (weights.valid, l_valid),
        "hole": (weights.hole, l_hole),
    }
    if weights.use_perceptual:
        terms["perceptual"] = (
            weights.perceptual, perceptual_loss(i_out, i_comp, i_gt, net))
    if weights.use_style:
        terms["style"] = (
            weights.style, style_loss(i_out, i_comp, i_gt, net))
    total = None
    breakdown = {}
    for name, (lam, term) in terms.items():
        breakdown[name] = term.item()
        weighted = T.scalar_mul(term, lam)
        total = weighted if total is None else T.add(total, weighted)
    breakdown["total"] = total.item()
    return total, breakdown


def _constant(x):
    """Ground truth never needs gradients; drop any tape association."""
    return Tensor(x.data if isinstance(x, Tensor) else x)


def _composite(i_out, i_gt, mask):
    from .unet import composite
    return composite(i_out, _constant(i_gt), mask)
