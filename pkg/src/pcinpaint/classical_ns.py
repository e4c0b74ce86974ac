"""Fluid-dynamics-style PDE inpainting baseline.

Transports image smoothness (the Laplacian, playing the role of vorticity)
along isophote directions into the hole, interleaved with a few steps of
anisotropic diffusion; hole pixels are seeded with the mean of the valid
pixels bordering their connected component.  Valid pixels are never touched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage


class NSError(ValueError):
    pass


@dataclass
class NSConfig:
    max_iters: int = 3000
    dt: float = 0.1
    diffusion_every: int = 15
    diffusion_steps: int = 2
    convergence_tol: float = 1e-5

    def __post_init__(self):
        if self.dt <= 0:
            raise NSError("dt must be positive")
        if self.max_iters < 1:
            raise NSError("max_iters must be >= 1")
        if self.convergence_tol < 0:
            raise NSError("convergence_tol must be >= 0")


def _replicate_pad(a):
    return np.pad(a, 1, mode="edge")


def _laplacian(a):
    p = _replicate_pad(a)
    return (p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:]
            - 4.0 * a)


def _central_grad(a):
    p = _replicate_pad(a)
    gy = 0.5 * (p[2:, 1:-1] - p[:-2, 1:-1])
    gx = 0.5 * (p[1:-1, 2:] - p[1:-1, :-2])
    return gy, gx


def _upwind_grad_mag(a, beta):
    """Osher-Sethian upwind |grad| switched on the sign of the transport term."""
    p = _replicate_pad(a)
    fyp = p[2:, 1:-1] - a    # forward differences
    fxm = a - p[1:-1, :-2]   # backward
    fym = a - p[:-2, 1:-1]
    fxp = p[1:-1, 2:] - a
    pos = np.sqrt(np.minimum(fxm, 0) ** 2 + np.maximum(fxp, 0) ** 2
                  + np.minimum(fym, 0) ** 2 + np.maximum(fyp, 0) ** 2)
    neg = np.sqrt(np.maximum(fxm, 0) ** 2 + np.minimum(fxp, 0) ** 2
                  + np.maximum(fym, 0) ** 2 + np.minimum(fyp, 0) ** 2)
    return np.where(beta > 0, pos, neg)


def _init_hole(channel, hole):
    """Fill each connected hole component with its valid border mean."""
    out = channel.copy()
    labels, count = ndimage.label(hole)
    for lab in range(1, count + 1):
        comp = labels == lab
        border = ndimage.binary_dilation(comp) & ~hole
        out[comp] = channel[border].mean() if border.any() else channel[~hole].mean()
    return out


def _diffuse(a, hole, steps, dt):
    """Edge-preserving diffusion confined to the hole."""
    for _ in range(steps):
        gy, gx = _central_grad(a)
        g = 1.0 / np.sqrt(1.0 + (gx ** 2 + gy ** 2) / 0.01)
        p = _replicate_pad(a)
        gp = _replicate_pad(g)
        # divergence of g*grad via half-point fluxes
        flux = ((gp[1:-1, 2:] + g) * 0.5 * (p[1:-1, 2:] - a)
                - (gp[1:-1, :-2] + g) * 0.5 * (a - p[1:-1, :-2])
                + (gp[2:, 1:-1] + g) * 0.5 * (p[2:, 1:-1] - a)
                - (gp[:-2, 1:-1] + g) * 0.5 * (a - p[:-2, 1:-1]))
        a = np.where(hole, a + dt * flux, a)
    return a


def _inpaint_channel(channel, hole, cfg):
    a = _init_hole(channel, hole)
    for it in range(1, cfg.max_iters + 1):
        lap = _laplacian(a)
        ly, lx = _central_grad(lap)
        gy, gx = _central_grad(a)
        # isophote direction: rotate grad by 90 degrees, normalized
        norm = np.sqrt(gx ** 2 + gy ** 2) + 1e-8
        beta = (-gy * lx + gx * ly) / norm
        update = cfg.dt * beta * _upwind_grad_mag(a, beta)
        a = np.where(hole, a + update, a)
        if cfg.diffusion_every and it % cfg.diffusion_every == 0:
            a = _diffuse(a, hole, cfg.diffusion_steps, cfg.dt)
        if np.abs(update[hole]).max() < cfg.convergence_tol:
            break
    return a


def ns_inpaint(image, mask, cfg=None):
    """Inpaint hole pixels (mask 0) of a [0,1] image, per channel.

    ``image`` is (c,h,w) or (n,c,h,w) with n=1; ``mask`` is (1,h,w)-like
    binary.  Valid pixels are returned bit-exact.
    """
    cfg = cfg or NSConfig()
    img = np.asarray(image, dtype=np.float32)
    squeeze = False
    if img.ndim == 3:
        img = img[None]
        squeeze = True
    md = np.asarray(mask, dtype=np.float32)
    if md.shape[-2:] != img.shape[2:]:
        raise NSError(
            f"mask dims {md.shape[-2:]} do not match image {img.shape[2:]}")
    md = md.reshape(img.shape[0], -1, img.shape[2], img.shape[3])
    if not np.isin(md, (0.0, 1.0)).all():
        raise NSError("mask values must be exactly 0 or 1")
    hole = md[0, 0] < 0.5
    out = img.copy()
    if hole.any():
        for ch in range(img.shape[1]):
            filled = _inpaint_channel(img[0, ch].astype(np.float64), hole, cfg)
            out[0, ch][hole] = filled[hole].astype(np.float32)
    return out[0] if squeeze else out
