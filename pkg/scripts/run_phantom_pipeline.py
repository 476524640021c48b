#!/usr/bin/env python3
"""End-to-end demo: generate phantoms, then extract -> assemble -> train ->
report through the command-line interface."""

import argparse
import sys
from pathlib import Path

from kneegrade.cli import main as cli
from kneegrade.phantoms import make_phantom_dataset


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="working directory")
    parser.add_argument("--n", type=int, default=500)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--rounds", type=int, default=150,
                        help="boosting rounds (300 is the full default)")
    args = parser.parse_args()
    out = Path(args.out)
    manifest = make_phantom_dataset(out / "data", n=args.n, seed=args.seed)
    seed = ["--seed", str(args.seed)]
    steps = [
        ["extract", "--manifest", str(manifest), "--out", str(out / "ex"),
         *seed],
        ["assemble", "--features", str(out / "ex" / "features_raw.csv"),
         "--out", str(out / "as"), *seed],
        ["train", "--features", str(out / "as" / "features.csv"),
         "--out", str(out / "tr"),
         "--config", f"model.n_rounds={args.rounds}", *seed],
        ["report", "--features", str(out / "as" / "features.csv"),
         "--model", str(out / "tr" / "model.json"), "--out", str(out / "rep"),
         "--config", f"model.n_rounds={args.rounds}", *seed],
    ]
    for step in steps:
        print("+ kneegrade " + " ".join(step))
        rc = cli(step)
        if rc:
            return rc
    print(f"report at {out / 'rep' / 'report.md'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
