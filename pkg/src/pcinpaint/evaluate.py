"""Evaluation harness: per-ratio seeded masks, several inpainting methods,
four metrics, JSON report with one row per method."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .classical_ns import NSConfig, ns_inpaint
from .data import list_images
from .imageio import load_image
from .maskgen import MaskSpec, generate_mask
from .metrics import aggregate, image_metrics
from .unet import composite, unet_forward
from .weights_io import load_model

LEARNED_METHODS = ("pconv", "pconv_no_style", "pconv_no_perceptual")
ALL_METHODS = LEARNED_METHODS + ("ns",)


class EvalError(ValueError):
    pass


@dataclass
class EvalConfig:
    data_dir: str = ""
    weights: object = ""        # path, or dict method -> path
    ratios: tuple = (0.05, 0.1, 0.2)
    methods: tuple = ("pconv", "ns")
    seed: int = 0
    report_path: str = ""
    split: str = "all"
    limit: int = 0              # 0 = all images
    hole_only: bool = False

    def __post_init__(self):
        for r in self.ratios:
            if not 0.0 < r < 1.0:
                raise EvalError(f"ratio {r} outside (0,1)")
        for m in self.methods:
            if m not in ALL_METHODS:
                raise EvalError(f"unknown method {m!r}")


def _weights_for(cfg, method):
    if isinstance(cfg.weights, dict):
        path = cfg.weights.get(method, "")
    else:
        path = cfg.weights
    if not path or not os.path.exists(path):
        raise EvalError(f"method {method!r} needs a weights file, got {path!r}")
    return path


def _inpaint_learned(model, img, mask):
    out, _ = unet_forward(model, img * mask, mask)
    return composite(out, img, mask).data


def evaluate(cfg):
    """Returns the report dict; also writes JSON when report_path is set."""
    paths = list_images(cfg.data_dir, cfg.split)
    if cfg.limit:
        paths = paths[: cfg.limit]
    images = [load_image(p) for p in paths]
    models = {}
    for method in cfg.methods:
        if method in LEARNED_METHODS:
            models[method] = load_model(_weights_for(cfg, method))

    rows = {m: {} for m in cfg.methods}
    for ri, ratio in enumerate(cfg.ratios):
        masks = []
        for ii, img in enumerate(images):
            mseed = int(np.random.default_rng(
                np.random.SeedSequence([cfg.seed, ri, ii])).integers(0, 2 ** 31))
            masks.append(generate_mask(
                MaskSpec(ratio, img.shape[2:], seed=mseed)))
        for method in cfg.methods:
            records = []
            for img, mask in zip(images, masks):
                mask_b = mask[None]  # (1,1,h,w)
                if method == "ns":
                    result = ns_inpaint(img, mask_b, NSConfig())
                    result = mask_b * img + (1 - mask_b) * result
                else:
                    result = _inpaint_learned(models[method], img, mask_b)
                records.append(image_metrics(
                    result * 255.0, img * 255.0,
                    mask_ratio=float(1.0 - mask.mean()),
                    hole_mask=mask_b if cfg.hole_only else None))
            agg = aggregate(records)
            agg["n_images"] = len(records)
            rows[method][f"{ratio:g}"] = agg

    report = {
        "ratios": [f"{r:g}" for r in cfg.ratios],
        "methods": list(cfg.methods),
        "metrics": ["l1", "mse", "psnr", "ssim"],
        "rows": rows,
    }
    if cfg.report_path:
        _write_json_atomic(cfg.report_path, report)
    return report


def _write_json_atomic(path, obj):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".json.tmp")
    try:
        with os.fdopen(fd, "w") as f:
            json.dump(obj, f, indent=2, sort_keys=True)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
