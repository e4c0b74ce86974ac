#!/usr/bin/env python3
"""Desk-scale training run: 8 synthetic 64x64 images, depth-4 UNet.

Writes weights + loss log under --out-dir and prints the loss fall and
hole-region PSNR over the training images, so a laptop run can sanity-check
the whole pipeline end to end.
"""

import argparse
import os
import time

import numpy as np

from pcinpaint.data import make_synthetic_dataset
from pcinpaint.desk import desk_config, hole_psnrs, loss_fall
from pcinpaint.train import train
from pcinpaint.weights_io import load_model


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="runs/desk")
    ap.add_argument("--iterations", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    data_dir = os.path.join(args.out_dir, "imgs")
    paths = make_synthetic_dataset(data_dir, 8, size=64, seed=1)
    cfg = desk_config(data_dir, os.path.join(args.out_dir, "run"),
                      args.iterations, seed=args.seed)
    t0 = time.time()
    weights_path, log_path = train(cfg)
    minutes = (time.time() - t0) / 60.0

    psnrs = hole_psnrs(load_model(weights_path), paths)
    print(f"weights: {weights_path}")
    print(f"train time: {minutes:.1f} min")
    print(f"total loss fall: {loss_fall(log_path):.1%}")
    print(f"hole PSNR per image: {[round(float(v), 1) for v in psnrs]}")
    print(f"hole PSNR mean: {float(np.mean(psnrs)):.2f} dB")


if __name__ == "__main__":
    main()
