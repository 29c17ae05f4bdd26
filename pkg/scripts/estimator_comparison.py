"""Lookup regressor vs four-bucket classifier: R^2 and MAE on held-out disks.

    python3 scripts/estimator_comparison.py --seeds 0 1 2 3 4
"""

import argparse
import sys

from phaseplace.evaluation import estimator_errors


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--disks", type=int, default=5000)
    args = ap.parse_args(argv)
    print("seed  reg_r2  reg_mae  bucket_r2  bucket_mae")
    for seed in args.seeds:
        e = estimator_errors(seed, args.disks)
        (r2r, maer), (r2b, maeb) = e["regressor"], e["buckets"]
        print(f"{seed:>4} {r2r:>7.3f} {maer:>8.1f} {r2b:>10.3f} {maeb:>11.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
