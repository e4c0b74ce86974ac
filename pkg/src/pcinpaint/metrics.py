"""Image quality metrics on the 0-255 scale: summed L1, MSE, PSNR, SSIM.

PSNR uses peak 255 and is capped at 100 dB for (near-)identical images.
SSIM is single-scale with an 11x11 Gaussian window (sigma 1.5), K1=0.01,
K2=0.03, computed per channel over valid window positions and averaged.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.ndimage import correlate

PEAK = 255.0
PSNR_CAP = 100.0
_MSE_FLOOR = PEAK * PEAK * 1e-10


class MetricError(ValueError):
    pass


def _as255(img):
    """Accept (c,h,w) or (n,c,h,w) float arrays already on the 0-255 scale."""
    a = np.asarray(img, dtype=np.float64)
    if a.ndim == 4:
        if a.shape[0] != 1:
            raise MetricError("metrics expect a single image")
        a = a[0]
    if a.ndim == 2:
        a = a[None]
    if a.ndim != 3:
        raise MetricError(f"expected image array, got shape {a.shape}")
    return a


def _pair(a, b):
    a, b = _as255(a), _as255(b)
    if a.shape != b.shape:
        raise MetricError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def l1_sum(a, b):
    """Summed absolute error over all pixels and channels."""
    a, b = _pair(a, b)
    return float(np.abs(a - b).sum())


def mse(a, b):
    a, b = _pair(a, b)
    return float(((a - b) ** 2).mean())


def psnr(mse_value):
    """10*log10(255^2 / mse), capped at 100 dB near zero error."""
    if mse_value < 0:
        raise MetricError("mse must be non-negative")
    if mse_value < _MSE_FLOOR:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * np.log10(PEAK * PEAK / mse_value))


_WINDOW = 11
_SIGMA = 1.5
_K1, _K2 = 0.01, 0.03


def _gaussian_window():
    ax = np.arange(_WINDOW, dtype=np.float64) - (_WINDOW - 1) / 2.0
    g = np.exp(-(ax ** 2) / (2.0 * _SIGMA ** 2))
    win = np.outer(g, g)
    return win / win.sum()


def ssim(a, b):
    """Mean single-scale SSIM over channels and valid window positions."""
    a, b = _pair(a, b)
    h, w = a.shape[1:]
    if h < _WINDOW or w < _WINDOW:
        raise MetricError(
            f"image {h}x{w} smaller than the {_WINDOW}x{_WINDOW} SSIM window")
    win = _gaussian_window()
    c1 = (_K1 * PEAK) ** 2
    c2 = (_K2 * PEAK) ** 2
    r = (_WINDOW - 1) // 2
    vals = []
    for ch in range(a.shape[0]):
        x, y = a[ch], b[ch]
        mu_x = correlate(x, win)[r:-r, r:-r]
        mu_y = correlate(y, win)[r:-r, r:-r]
        xx = correlate(x * x, win)[r:-r, r:-r] - mu_x ** 2
        yy = correlate(y * y, win)[r:-r, r:-r] - mu_y ** 2
        xy = correlate(x * y, win)[r:-r, r:-r] - mu_x * mu_y
        num = (2 * mu_x * mu_y + c1) * (2 * xy + c2)
        den = (mu_x ** 2 + mu_y ** 2 + c1) * (xx + yy + c2)
        vals.append((num / den).mean())
    return float(np.mean(vals))


@dataclass
class ImageMetrics:
    l1: float
    mse: float
    psnr: float
    ssim: float
    mask_ratio: float

    def as_dict(self):
        return asdict(self)


def image_metrics(result, ground_truth, mask_ratio=0.0, hole_mask=None):
    """All four metrics for one image pair on the 0-255 scale.

    ``hole_mask`` (1 = valid), if given, restricts L1/MSE/PSNR to hole
    pixels; SSIM stays full-image (it is window-based).
    """
    a, b = _pair(result, ground_truth)
    if hole_mask is None:
        m = mse(a, b)
        rec = ImageMetrics(l1=l1_sum(a, b), mse=m, psnr=psnr(m),
                           ssim=ssim(a, b), mask_ratio=mask_ratio)
        return rec
    hm = np.asarray(hole_mask, dtype=np.float64)
    if hm.ndim == 4:
        hm = hm[0]
    hole = hm[0] < 0.5
    if not hole.any():
        raise MetricError("hole mask selects no pixels")
    diff = a[:, hole] - b[:, hole]
    m = float((diff ** 2).mean())
    return ImageMetrics(l1=float(np.abs(diff).sum()), mse=m, psnr=psnr(m),
                        ssim=ssim(a, b), mask_ratio=mask_ratio)


def aggregate(records):
    """Dataset means per metric; per-image PSNR averaging."""
    if not records:
        return {}
    keys = ("l1", "mse", "psnr", "ssim", "mask_ratio")
    return {k: float(np.mean([getattr(r, k) for r in records])) for k in keys}
