"""Dataset folder handling and a synthetic desk-scale image generator."""

from __future__ import annotations

import hashlib
import os

import numpy as np

from .imageio import save_image


class DataError(ValueError):
    pass


def split_of(filename):
    """Deterministic 70/15/15 split by filename hash."""
    h = int.from_bytes(
        hashlib.sha1(os.path.basename(filename).encode()).digest()[:4], "big")
    bucket = h % 100
    if bucket < 70:
        return "train"
    if bucket < 85:
        return "val"
    return "test"


def list_images(data_dir, split="all"):
    """Sorted PNG paths in a directory, optionally filtered by split."""
    if not os.path.isdir(data_dir):
        raise DataError(f"data directory not found: {data_dir}")
    paths = sorted(
        os.path.join(data_dir, f) for f in os.listdir(data_dir)
        if f.lower().endswith(".png"))
    if split != "all":
        paths = [p for p in paths if split_of(p) == split]
    if not paths:
        raise DataError(f"no PNG images in {data_dir} (split={split})")
    return paths


def synthetic_image(size, rng):
    """Smooth random RGB image: low-frequency noise plus soft shapes."""
    h = w = size
    img = np.zeros((3, h, w), np.float32)
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float32)
    for c in range(3):
        base = rng.random((4, 4)).astype(np.float32)
        big = np.kron(base, np.ones((h // 4, w // 4), np.float32))
        # separable box blur to smooth the blocks
        k = size // 8 + 1
        big = np.apply_along_axis(
            lambda v: np.convolve(v, np.ones(k) / k, mode="same"), 0, big)
        big = np.apply_along_axis(
            lambda v: np.convolve(v, np.ones(k) / k, mode="same"), 1, big)
        gx, gy = rng.uniform(-0.5, 0.5, 2)
        img[c] = 0.6 * big + 0.4 * (0.5 + gx * (xx / w - 0.5) + gy * (yy / h - 0.5))
    for _ in range(rng.integers(2, 5)):
        cy, cx = rng.uniform(0.2, 0.8, 2) * size
        r = rng.uniform(0.05, 0.2) * size
        blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r * r))
        col = rng.random(3).astype(np.float32)
        img += 0.5 * blob[None] * (col[:, None, None] - img)
    return np.clip(img, 0.0, 1.0)[None]


def make_synthetic_dataset(out_dir, count, size=64, seed=0):
    """Write ``count`` deterministic synthetic PNGs; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for i in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        path = os.path.join(out_dir, f"synth_{i:03d}.png")
        save_image(path, synthetic_image(size, rng))
        paths.append(path)
    return paths
