"""Irregular free-form mask generation at controlled hole ratios.

Masks follow the pinned polarity: 1/white = valid, 0/black = hole.  Holes
are unions of random-walk polyline brush strokes; strokes are added until
the hole ratio reaches the target, then the hole is trimmed from its
boundary inward until the achieved ratio is within +/-0.01.
"""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np
from scipy import ndimage


class MaskGenError(ValueError):
    pass


@dataclass
class MaskSpec:
    target_ratio: float
    size: tuple = (256, 256)
    seed: int = 0
    stroke_count: tuple = (1, 5)
    width_range: tuple = None  # defaults scale with image size
    vertex_range: tuple = (4, 12)
    tolerance: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.target_ratio < 0.9:
            raise MaskGenError(
                f"target ratio {self.target_ratio} outside (0, 0.9)")
        if self.width_range is None:
            scale = min(self.size) / 256.0
            self.width_range = (max(2, round(5 * scale)),
                               max(4, round(30 * scale)))


def _draw_stroke(hole, rng, spec):
    h, w = hole.shape
    nv = int(rng.integers(spec.vertex_range[0], spec.vertex_range[1] + 1))
    width = int(rng.integers(spec.width_range[0], spec.width_range[1] + 1))
    y = float(rng.uniform(0, h))
    x = float(rng.uniform(0, w))
    angle = float(rng.uniform(0, 2 * np.pi))
    step = max(4.0, min(h, w) / 8.0)
    for _ in range(nv):
        angle += float(rng.uniform(-np.pi / 2, np.pi / 2))
        length = float(rng.uniform(step * 0.5, step * 1.5))
        ny = float(np.clip(y + length * np.sin(angle), 0, h - 1))
        nx = float(np.clip(x + length * np.cos(angle), 0, w - 1))
        cv2.line(hole, (int(round(x)), int(round(y))),
                 (int(round(nx)), int(round(ny))), 1, thickness=width)
        y, x = ny, nx


def _trim_hole(hole, excess):
    """Remove ``excess`` hole pixels, outermost (closest to valid) first."""
    dist = ndimage.distance_transform_edt(hole)
    ys, xs = np.nonzero(hole)
    order = np.lexsort((xs, ys, dist[ys, xs]))  # deterministic tie-break
    drop = order[:excess]
    hole[ys[drop], xs[drop]] = 0
    return hole


def generate_mask(spec):
    """Binary mask (1,h,w) float32 with hole ratio within spec.tolerance.

    Deterministic per seed.  Raises MaskGenError (naming the achieved
    ratio) if the target cannot be reached within the stroke budget.
    """
    h, w = spec.size
    area = h * w
    target = spec.target_ratio
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0xA5C]))
    hole = np.zeros((h, w), dtype=np.uint8)
    budget = 2000
    while hole.sum() < target * area and budget > 0:
        _draw_stroke(hole, rng, spec)
        budget -= 1
    achieved = hole.sum() / area
    if achieved < target - spec.tolerance:
        raise MaskGenError(
            f"could not reach hole ratio {target}: achieved {achieved:.4f}")
    excess = int(hole.sum() - round(target * area))
    if excess > 0:
        hole = _trim_hole(hole.astype(bool).astype(np.uint8), excess)
    mask = (1 - hole).astype(np.float32)[None]
    ratio = 1.0 - mask.mean()
    if abs(ratio - target) > spec.tolerance:
        raise MaskGenError(
            f"could not reach hole ratio {target}: achieved {ratio:.4f}")
    return mask
