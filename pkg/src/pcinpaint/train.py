"""Training loop: sample images and fresh masks, zero holes, forward the
UNet, evaluate the weighted loss, backprop, Adam step.

Everything random is derived from (seed, iteration), so a run is fully
reproducible and checkpoint-resume is bit-exact.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import tensor as T
from .tensor import GradTape, backward
from .data import list_images
from .imageio import load_image
from .losses import FeatureConfig, FeatureNetwork, LossWeights, total_loss
from .maskgen import MaskSpec, generate_mask
from .unet import UNetConfig, UNetModel, unet_forward
from .weights_io import load_tensors, save_model, save_tensors


class TrainError(ValueError):
    pass


@dataclass
class TrainConfig:
    data_dir: str = ""
    out_dir: str = "runs/train"
    iterations: int = 34500
    batch_size: int = 3
    learning_rate: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    image_size: int = 256
    checkpoint_every: int = 500
    mask_ratio_range: tuple = (0.05, 0.3)
    split: str = "train"
    loss_weights: LossWeights = field(default_factory=LossWeights)
    unet: UNetConfig = field(default_factory=UNetConfig)
    feature_blocks: tuple = ((8, 8), (16, 16), (32, 32))
    feature_seed: int = 0
    feature_scale: float = 1.0
    resume_from: str = ""

    def __post_init__(self):
        if self.iterations < 1:
            raise TrainError("iterations must be >= 1")
        if self.batch_size < 1:
            raise TrainError("batch_size must be >= 1")
        if self.image_size % self.unet.divisor:
            raise TrainError(
                f"image_size {self.image_size} not divisible by "
                f"{self.unet.divisor}")


class Adam:
    """Plain Adam on a dict of named parameters, all state in f32."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params, grads):
        self.t += 1
        b1t = np.float32(1.0 - self.b1 ** self.t)
        b2t = np.float32(1.0 - self.b2 ** self.t)
        out = {}
        for k, p in params.items():
            g = grads[k].reshape(p.shape)
            m = self.m[k] = np.float32(self.b1) * self.m[k] + np.float32(1 - self.b1) * g
            v = self.v[k] = np.float32(self.b2) * self.v[k] + np.float32(1 - self.b2) * (g * g)
            mh = m / b1t
            vh = v / b2t
            out[k] = (p - np.float32(self.lr) * mh
                      / (np.sqrt(vh) + np.float32(self.eps))).astype(np.float32)
        return out


def _iteration_batch(cfg, paths, images, it):
    """Deterministic batch of (zeroed image, mask, ground truth) for step it."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, it]))
    idx = rng.integers(0, len(paths), size=cfg.batch_size)
    gts, masks = [], []
    lo, hi = cfg.mask_ratio_range
    for j, i in enumerate(idx):
        r = float(rng.uniform(lo, hi))
        mseed = int(rng.integers(0, 2 ** 31))
        masks.append(generate_mask(
            MaskSpec(r, (cfg.image_size, cfg.image_size), seed=mseed)))
        gts.append(images[i])
    gt = np.concatenate(gts, axis=0)
    mask = np.stack(masks, axis=0)
    return gt * mask, mask, gt


def train(cfg):
    """Run the loop; returns (weights_path, log_path)."""
    paths = list_images(cfg.data_dir, cfg.split)
    images = [load_image(p) for p in paths]
    for p, im in zip(paths, images):
        if im.shape[2] != cfg.image_size or im.shape[3] != cfg.image_size:
            raise TrainError(
                f"{p}: expected {cfg.image_size}x{cfg.image_size}, "
                f"got {im.shape[2]}x{im.shape[3]}")
    if len(paths) < cfg.batch_size:
        raise TrainError(
            f"need at least batch_size={cfg.batch_size} images, "
            f"found {len(paths)}")

    model = UNetModel(cfg.unet, seed=cfg.seed)
    net = FeatureNetwork(
        FeatureConfig(block_channels=cfg.feature_blocks,
                      init_scale=cfg.feature_scale),
        seed=cfg.feature_seed)
    opt = Adam(model.params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    start = 0
    if cfg.resume_from:
        start = _load_checkpoint(cfg.resume_from, model, opt)

    os.makedirs(cfg.out_dir, exist_ok=True)
    log_path = os.path.join(cfg.out_dir, "loss_log.csv")
    weights_path = os.path.join(cfg.out_dir, "weights.pcnw")
    term_names = ["tv", "valid", "hole", "perceptual", "style"]
    mode = "a" if start else "w"
    with open(log_path, mode, newline="") as logf:
        writer = csv.writer(logf)
        if not start:
            writer.writerow(["iter"] + term_names + ["total"])
        for it in range(start + 1, cfg.iterations + 1):
            x0, mask, gt = _iteration_batch(cfg, paths, images, it)
            tape = GradTape()
            out, _ = unet_forward(model, x0, mask, tape=tape)
            loss, breakdown = total_loss(out, gt, mask, net, cfg.loss_weights)
            grads = backward(loss, tape)
            tape.release()
            new_params = opt.step(model.params, grads)
            model.params.update(new_params)
            writer.writerow(
                [it] + [f"{breakdown.get(k, 0.0):.8g}" for k in term_names]
                + [f"{breakdown['total']:.8g}"])
            if cfg.checkpoint_every and it % cfg.checkpoint_every == 0:
                _save_checkpoint(
                    os.path.join(cfg.out_dir, f"checkpoint_{it:06d}.pcnw"),
                    model, opt, it)
    save_model(weights_path, model)
    return weights_path, log_path


def _save_checkpoint(path, model, opt, it):
    tensors = {"ckpt.iter": np.array([it], np.float32)}
    for k, v in model.params.items():
        tensors[f"param.{k}"] = v
        tensors[f"adam.m.{k}"] = opt.m[k]
        tensors[f"adam.v.{k}"] = opt.v[k]
    save_tensors(path, tensors)


def _load_checkpoint(path, model, opt):
    tensors = load_tensors(path)
    it = int(tensors["ckpt.iter"][0])
    for k in model.params:
        model.params[k] = tensors[f"param.{k}"]
        opt.m[k] = tensors[f"adam.m.{k}"]
        opt.v[k] = tensors[f"adam.v.{k}"]
    opt.t = it
    return it
