"""Acceptance criteria, one test each.

Multi-seed criteria run on the seeds in ``ACCEPTANCE_SEEDS`` (comma-separated,
default ``0,1,2,3,4``) with 5,000-disk corpora.  Each test prints a single
PASS/FAIL line, also collected into the terminal summary.
"""

import functools
import os
import time

import numpy as np
import pytest

from phaseplace.cli import main
from phaseplace.evaluation import (
    BASELINES,
    concentration_ratio,
    estimator_errors,
    noise_robustness,
    policy_comparison,
)
from phaseplace.placement import (
    Pods,
    PolicyConfig,
    delta_var,
    select_spatial_candidates,
    spatial_fallback,
    spatial_score,
    variance,
)
from phaseplace.semantics import lcp_ratio
from phaseplace.simulator import otf
from phaseplace.workload import ApplicationClass

from conftest import ACCEPTANCE_LINES

SEEDS = tuple(int(s) for s in os.environ.get("ACCEPTANCE_SEEDS", "0,1,2,3,4").split(","))
pytestmark = pytest.mark.slow


def report(criterion: str, ok: bool, detail: str):
    line = f"{'PASS' if ok else 'FAIL'} {criterion}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    if not ok:
        pytest.fail(line, pytrace=False)


def majority(flags) -> bool:
    flags = list(flags)
    return sum(flags) > len(flags) / 2


@functools.lru_cache(maxsize=None)
def comparison(seed):
    return policy_comparison(seed)


@functools.lru_cache(maxsize=None)
def noise(seed):
    return noise_robustness(seed)


def test_c01_oracle_equivalence():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        K = int(rng.choice([2, 3, 4, 6, 8, 12, 24, 48]))
        scale = 10.0 ** rng.uniform(-2, 4)
        L = rng.uniform(0, scale, K)
        l = rng.uniform(0, scale, K) * rng.random()
        direct = variance(L + l) - variance(L)
        worst = max(worst, abs(delta_var(L, l) - direct) / max(1.0, variance(L + l)))
    report("c1 oracle equivalence", worst <= 1e-9, f"max scaled error {worst:.2e}")


def test_c02_fixtures():
    pods = Pods(np.array([100.0, 100.0]), np.array([10.0, 10.0]), np.array([50.0, 20.0]),
                np.array([5.0, 8.0]), np.zeros((2, 1)))
    s1 = round(spatial_score(pods, 0, 10, 1, 0.5), 4)
    s2 = round(spatial_score(pods, 1, 10, 1, 0.5), 4)
    checks = {
        "delta_var": delta_var([1, 3], [2, 0]) == -1,
        "spatial": (s1, s2) == (0.3214, 0.5679),
        "lcp": lcp_ratio("db-data-02", "db-data-01") == 0.9,
        "otf": otf(np.r_[np.ones(2, bool), np.zeros(8, bool)]) == 0.2,
    }
    ok = all(checks.values())
    report("c2 hand-computed fixtures", ok, ", ".join(f"{k}={v}" for k, v in checks.items()))


def test_c03_policy_ordering():
    lines, flags = [], []
    for s in SEEDS:
        r = comparison(s)
        best = r.best_baseline
        t, o, b = r.otf("tidal"), r.otf("oracle"), r.otf(best)
        ok = o <= t < min(r.otf(x) for x in BASELINES) and t <= 0.5 * b
        flags.append(ok)
        lines.append(f"seed {s}: oracle={o:.4f} tidal={t:.4f} {best}={b:.4f}")
    report("c3 policy ordering (every seed)", all(flags), "; ".join(lines))


def test_c04_tail_reduction():
    lines, flags = [], []
    for s in SEEDS:
        r = comparison(s)
        p_t, p_b = r.reports["tidal"].p95_duration_s, r.best_baseline_p95()
        flags.append(p_t <= 0.6 * p_b)
        lines.append(f"seed {s}: {p_t}s vs {p_b}s")
    report("c4 P95 tail reduction (majority)", majority(flags), "; ".join(lines))


def test_c05_component_ablation():
    lines, flags = [], []
    for s in SEEDS:
        r = comparison(s)
        t, ti = r.otf("tidal"), r.otf("tidal-int")
        si, sc = r.reports["tidal-int"].spatial_imbalance, r.reports["tidal-cap"].spatial_imbalance
        flags.append(t <= 0.5 * ti and si < sc)
        lines.append(f"seed {s}: otf {t:.4f}/{ti:.4f} spatial int={si:.3f} cap={sc:.3f}")
    report("c5 component ablation (majority)", majority(flags), "; ".join(lines))


def test_c06_objective_ablation():
    lines, ordered, never_worst = [], [], []
    for s in SEEDS:
        r = comparison(s)
        d, a, p = r.otf("delta_var"), r.otf("abs_var"), r.otf("peak")
        ordered.append(d <= a <= p)
        never_worst.append(d < max(a, p) or d == a == p)
        lines.append(f"seed {s}: delta_var={d:.4f} abs_var={a:.4f} peak={p:.4f}")
    ok = majority(ordered) and all(never_worst)
    detail = f"ordered on {sum(ordered)}/{len(SEEDS)}, delta_var never worst={all(never_worst)}; "
    report("c6 objective ablation", ok, detail + "; ".join(lines))


def test_c07_concentration():
    ratios = {label: concentration_ratio(label)
              for label in (ApplicationClass.GAMING, ApplicationClass.DATABASE)}
    ok = all(v <= 0.25 for v in ratios.values())
    detail = ", ".join(f"{k.value} r(400)/r(4)={v:.3f}" for k, v in ratios.items())
    report("c7 concentration", ok, detail)


def test_c08_noise_robustness():
    results = [res for s in SEEDS for res in noise(s)]
    intercept = min(r.intercepted for r in results)
    fallback = min(r.fallback_unfiltered for r in results)
    by_ratio = {}
    for r in results:
        by_ratio.setdefault(r.ratio, []).append(r.otf_filtered <= r.otf_tela)
    otf_ok = all(majority(v) for v in by_ratio.values())
    ok = intercept >= 0.90 and fallback >= 0.75 and otf_ok
    detail = (f"min interception {intercept:.3f}, min unfiltered fallback {fallback:.3f}, "
              + ", ".join(f"ratio {k}: tidal<=tela on {sum(v)}/{len(v)}"
                          for k, v in sorted(by_ratio.items())))
    report("c8 noise robustness", ok, detail)


def _check_log(rep, M):
    bad = 0
    for d in rep.decisions:
        if d["path"] == "baseline":
            continue
        n = len(d["pods_used_capacity"])
        pods = Pods(np.full(n, rep.capacity_max), np.full(n, rep.bandwidth_max),
                    np.array(d["pods_used_capacity"]), np.array(d["pods_avg_load"]),
                    np.zeros((n, 1)))
        if d["path"].startswith("fallback"):
            bad += d["pod_id"] != spatial_fallback(pods, d["size_gb"], d["intensity"])
        else:
            top = select_spatial_candidates(pods, d["size_gb"], d["intensity"], M)
            bad += d["pod_id"] not in top or sorted(top) != d["candidates"]
    return bad


def test_c09_fallback_and_screening():
    M = PolicyConfig().candidates
    checked = bad = 0
    for s in SEEDS:
        r = comparison(s)
        for name in ("tidal", "tidal-int", "oracle", "abs_var", "peak"):
            rep = r.reports[name]
            checked += sum(d["path"] != "baseline" for d in rep.decisions)
            bad += _check_log(rep, M)
    ok = bad == 0 and checked > 0
    report("c9 fallback/screening contracts", ok, f"{bad} violations in {checked} decisions")


def test_c10_regression_vs_buckets():
    seeds = tuple(range(5)) if len(SEEDS) < 5 else SEEDS
    lines, wins = [], 0
    for s in seeds:
        e = estimator_errors(s)
        (_, mae_r), (_, mae_b) = e["regressor"], e["buckets"]
        wins += mae_r <= mae_b
        lines.append(f"seed {s}: {mae_r:.1f} vs {mae_b:.1f}")
    ok = wins >= 4
    report("c10 regressor MAE <= buckets", ok, f"{wins}/{len(seeds)}; " + "; ".join(lines))


def test_c11_determinism(tmp_path):
    gen = ["--disks", "400", "--days", "2"]
    main(["generate", "--out", str(tmp_path / "train"), "--seed", "101", *gen])
    main(["generate", "--out", str(tmp_path / "test"), "--seed", "1", *gen])
    main(["build", "--corpus", str(tmp_path / "train"), "--out", str(tmp_path / "art")])
    rc1 = main(["compare", "--corpus", str(tmp_path / "test"), "--artifacts",
                str(tmp_path / "art"), "--out", str(tmp_path / "run1")])
    rc2 = main(["compare", "--config", str(tmp_path / "run1" / "manifest.json"),
                "--out", str(tmp_path / "run2")])
    a = (tmp_path / "run1" / "metrics.csv").read_bytes()
    b = (tmp_path / "run2" / "metrics.csv").read_bytes()
    ok = rc1 == rc2 == 0 and a == b and len(a) > 0
    report("c11 determinism", ok, f"metrics.csv {len(a)} bytes, identical={a == b}")


def test_compare_runtime_budget():
    t0 = time.perf_counter()
    policy_comparison(SEEDS[0], policies=("rr", "cbp", "scda", "tela", "tidal", "oracle"),
                      objectives=())
    elapsed = time.perf_counter() - t0
    report("runtime: full compare under 120 s", elapsed < 120, f"{elapsed:.1f}s")
