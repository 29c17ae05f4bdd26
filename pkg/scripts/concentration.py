"""Distance between the normalized aggregate of N class disks and the class shape.

    python3 scripts/concentration.py --sizes 4 16 64 100 400 --seeds 20
"""

import argparse
import sys

import numpy as np

from phaseplace.evaluation import concentration_distance
from phaseplace.workload import ApplicationClass


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--label", default="Gaming")
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 16, 64, 100, 400])
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args(argv)
    label = ApplicationClass.from_label(args.label)
    base = None
    for n in args.sizes:
        r = float(np.mean([concentration_distance(label, n, s) for s in range(args.seeds)]))
        base = base or r
        print(f"N={n:<5} r={r:.4f} r/r({args.sizes[0]})={r / base:.3f} "
              f"sqrt-law={np.sqrt(args.sizes[0] / n):.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
