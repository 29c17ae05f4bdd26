"""Sweep the slot count K and candidate count M for the phase-aware policy.

    python3 scripts/hyperparameter_sweep.py --seed 0 --slots 2 4 6 12 24 --candidates 2 4 8 16
"""

import argparse
import sys

from phaseplace.evaluation import corpora
from phaseplace.experiments import build_artifacts, run_policy
from phaseplace.placement import PolicyConfig
from phaseplace.simulator import SimConfig


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--disks", type=int, default=5000)
    ap.add_argument("--slots", type=int, nargs="+", default=[2, 4, 6, 12, 24])
    ap.add_argument("--candidates", type=int, nargs="+", default=[2, 4, 8, 16])
    args = ap.parse_args(argv)
    train, test = corpora(args.seed, args.disks)
    for K in args.slots:
        art = build_artifacts(train, K)
        rep = run_policy("tidal", test, art, PolicyConfig(K=K), SimConfig(K=K))
        print(f"K={K:<3} otf={rep.otf_final:.4f} p95={rep.p95_duration_s}s")
    art = build_artifacts(train, 12)
    for M in args.candidates:
        rep = run_policy("tidal", test, art, PolicyConfig(candidates=M), SimConfig())
        print(f"M={M:<3} otf={rep.otf_final:.4f} p95={rep.p95_duration_s}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
