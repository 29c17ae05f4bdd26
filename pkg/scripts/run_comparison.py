"""Policy comparison across seeds: OTF, P95 and imbalance per policy.

    python3 scripts/run_comparison.py --seeds 0 1 2 --out results/comparison.csv
"""

import argparse
import csv
import sys

from phaseplace.evaluation import policy_comparison
from phaseplace.simulator import SimConfig


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--disks", type=int, default=5000)
    ap.add_argument("--capacity-factor", type=float, default=SimConfig().capacity_factor)
    ap.add_argument("--warmup", default=SimConfig().warmup,
                    choices=("pending_disks", "unobserved_slots"))
    ap.add_argument("--out", help="CSV file for the long-format results")
    args = ap.parse_args(argv)

    sim = SimConfig(capacity_factor=args.capacity_factor, warmup=args.warmup)
    rows = []
    for seed in args.seeds:
        res = policy_comparison(seed, args.disks, sim_config=sim)
        print(f"seed {seed}")
        for name, rep in res.reports.items():
            print(f"  {name:<10} otf={rep.otf_final:.4f} p95={rep.p95_duration_s:>5}s "
                  f"p99={rep.p99_duration_s:>5}s spatial={rep.spatial_imbalance:.3f} "
                  f"temporal={rep.temporal_imbalance:.3f}")
            rows.append([seed, name, rep.otf_final, rep.p95_duration_s, rep.p99_duration_s,
                         rep.spatial_imbalance, rep.temporal_imbalance])
    if args.out:
        with open(args.out, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["seed", "policy", "otf", "p95_s", "p99_s", "spatial", "temporal"])
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
