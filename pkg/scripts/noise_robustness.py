"""Noise injection: filter interception, unfiltered fallback share and OTF vs TELA.

    python3 scripts/noise_robustness.py --seeds 0 1 2
"""

import argparse
import sys

from phaseplace.evaluation import noise_robustness


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--ratios", type=float, nargs="+", default=[0.2, 0.5, 0.8])
    ap.add_argument("--disks", type=int, default=5000)
    args = ap.parse_args(argv)
    print("seed ratio intercepted fallback_unfiltered otf_tidal otf_tela")
    for seed in args.seeds:
        for r in noise_robustness(seed, tuple(args.ratios), args.disks):
            print(f"{seed:>4} {r.ratio:>5} {r.intercepted:>11.3f} {r.fallback_unfiltered:>19.3f} "
                  f"{r.otf_filtered:>9.4f} {r.otf_tela:>8.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
