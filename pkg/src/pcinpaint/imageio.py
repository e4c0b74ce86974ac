"""PNG image and mask I/O.

Images load as (1,3,h,w) float32 in [0,1]; masks load as (1,1,h,w) binary
with white = valid.  Writes go through a temp file and atomic rename.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np
from PIL import Image, UnidentifiedImageError


class ImageIOError(ValueError):
    pass


def load_image(path):
    """8-bit PNG (RGB or grayscale) -> (1,3,h,w) float32 in [0,1]."""
    try:
        with Image.open(path) as im:
            im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.float32) / 255.0
    except (FileNotFoundError, UnidentifiedImageError, OSError) as e:
        raise ImageIOError(f"cannot read image {path}: {e}") from e
    return arr.transpose(2, 0, 1)[None]


def save_image(path, tensor):
    """Clamp to [0,1], quantize round-half-up to 8 bit, write atomically."""
    arr = np.asarray(tensor.data if hasattr(tensor, "data") else tensor,
                     dtype=np.float32)
    if arr.ndim == 4:
        arr = arr[0]
    arr = np.clip(arr, 0.0, 1.0)
    q = np.floor(arr * 255.0 + 0.5).astype(np.uint8)
    if q.shape[0] == 1:
        im = Image.fromarray(q[0], mode="L")
    else:
        im = Image.fromarray(q.transpose(1, 2, 0), mode="RGB")
    _atomic_save(im, path)


def load_mask(path):
    """Grayscale PNG -> (1,1,h,w) binary; values threshold at 128."""
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("L"))
    except (FileNotFoundError, UnidentifiedImageError, OSError) as e:
        raise ImageIOError(f"cannot read mask {path}: {e}") from e
    return (arr >= 128).astype(np.float32)[None, None]


def save_mask(path, mask):
    arr = np.asarray(mask.data if hasattr(mask, "data") else mask)
    while arr.ndim > 2:
        arr = arr[0]
    im = Image.fromarray((arr > 0.5).astype(np.uint8) * 255, mode="L")
    _atomic_save(im, path)


def _atomic_save(im, path):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".png.tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            im.save(f, format="PNG")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
