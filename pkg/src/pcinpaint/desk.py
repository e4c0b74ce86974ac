"""Desk-scale recipe: the small configuration that exercises the whole
training pipeline end to end on a laptop CPU in minutes.

8 synthetic 64x64 images, a depth-4 UNet, and a feature network whose
init scale is turned down so the style term does not drown the pixel
terms (the frozen random features are far peakier than a pretrained
backbone at scale 1.0, see FeatureConfig.init_scale).
"""

from __future__ import annotations

import numpy as np

from .imageio import load_image
from .maskgen import MaskSpec, generate_mask
from .metrics import image_metrics
from .train import TrainConfig
from .unet import UNetConfig, composite, unet_forward

DESK_UNET = dict(depth=4, encoder_channels=(16, 32, 64, 64),
                 kernel_sizes=(7, 5, 3, 3))
DESK_LR = 1e-3
DESK_FEATURE_SCALE = 0.05


def desk_unet():
    return UNetConfig(**DESK_UNET)


def desk_config(data_dir, out_dir, iterations, seed=0, **kw):
    base = dict(data_dir=data_dir, out_dir=out_dir, iterations=iterations,
                batch_size=3, image_size=64, split="all",
                checkpoint_every=0, seed=seed, learning_rate=DESK_LR,
                feature_scale=DESK_FEATURE_SCALE, unet=desk_unet())
    base.update(kw)
    return TrainConfig(**base)


def loss_fall(log_path, window=10):
    """1 - (mean of last `window` totals) / (mean of first `window`)."""
    rows = [r.split(",") for r in open(log_path).read().splitlines()[1:]]
    total = np.array([float(r[-1]) for r in rows])
    return float(1.0 - total[-window:].mean() / total[:window].mean())


def hole_psnrs(model, image_paths, ratio=0.15, seed_base=100):
    """Hole-region PSNR per image, fresh seeded masks, clamped composite."""
    vals = []
    for i, p in enumerate(sorted(image_paths)):
        img = load_image(p)
        mask = generate_mask(
            MaskSpec(ratio, img.shape[2:], seed=seed_base + i))[None]
        out, _ = unet_forward(model, img * mask, mask)
        comp = np.clip(composite(out, img, mask).data, 0.0, 1.0)
        vals.append(image_metrics(comp * 255.0, img * 255.0,
                                  hole_mask=mask).psnr)
    return vals
