#!/usr/bin/env python3
"""Generate a small synthetic desk-scale dataset of PNGs."""

import argparse

from pcinpaint.data import make_synthetic_dataset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", required=True)
    ap.add_argument("--count", type=int, default=8)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    paths = make_synthetic_dataset(args.out_dir, args.count,
                                   size=args.size, seed=args.seed)
    for p in paths:
        print(p)


if __name__ == "__main__":
    main()
