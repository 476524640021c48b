#!/usr/bin/env python3
"""Generate a synthetic phantom dataset (images, masks, manifest CSV)."""

import argparse
from pathlib import Path

from kneegrade.phantoms import make_phantom_dataset


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--n", type=int, default=500, help="number of phantoms")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    manifest = make_phantom_dataset(Path(args.out), n=args.n, seed=args.seed)
    print(f"wrote {args.n} phantoms; manifest at {manifest}")


if __name__ == "__main__":
    main()
