"""Multi-seed experiments shared by the acceptance tests and the scripts/ runners.

Each helper generates a training corpus (seed ``1000 + seed``) and a disjoint
test corpus (``seed``), builds artifacts on the first and replays the second.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .experiments import build_artifacts, make_pipeline, run_policy
from .generator import GEN_SLOTS, Corpus, GeneratorConfig, default_templates, generate_corpus
from .generator import inject_noise, noisy_ids
from .intensity import BucketClassifier, LookupRegressor, evaluate
from .placement import DecisionPath, Objective, PolicyConfig
from .profiles import mean_normalize
from .semantics import Source
from .simulator import MetricsReport, SimConfig
from .workload import ApplicationClass, aggregate_to_slots

BASELINES = ("rr", "cbp", "scda", "tela")
TRAIN_SEED_OFFSET = 1000


def corpora(seed: int, n_disks: int = 5000) -> tuple[Corpus, Corpus]:
    train = generate_corpus(GeneratorConfig(n_disks=n_disks, seed=TRAIN_SEED_OFFSET + seed))
    test = generate_corpus(GeneratorConfig(n_disks=n_disks, seed=seed))
    return train, test


@dataclass
class SeedResult:
    seed: int
    reports: dict[str, MetricsReport] = field(default_factory=dict)

    def otf(self, name: str) -> float:
        return self.reports[name].otf_final

    @property
    def best_baseline(self) -> str:
        return min(BASELINES, key=lambda b: (self.otf(b), b))

    def best_baseline_p95(self) -> int:
        return min(self.reports[b].p95_duration_s for b in BASELINES)


def policy_comparison(seed: int, n_disks: int = 5000,
                      policies=("rr", "cbp", "scda", "tela", "tidal", "oracle",
                                "tidal-int", "tidal-cap"),
                      objectives=(Objective.ABS_VAR, Objective.PEAK),
                      sim_config: SimConfig = SimConfig()) -> SeedResult:
    """All policies plus the alternative greedy objectives on one seed.

    Objective variants are stored under their objective name (``abs_var``,
    ``peak``); ``tidal`` doubles as ``delta_var``.
    """
    train, test = corpora(seed, n_disks)
    art = build_artifacts(train, sim_config.K)
    base = PolicyConfig(K=sim_config.K)
    out = SeedResult(seed)
    for name in policies:
        out.reports[name] = run_policy(name, test, art, base, sim_config)
    for obj in objectives:
        cfg = PolicyConfig(K=sim_config.K, objective=obj)
        out.reports[obj.value] = run_policy("tidal", test, art, cfg, sim_config)
    if "tidal" in out.reports:
        out.reports[Objective.DELTA_VAR.value] = out.reports["tidal"]
    return out


@dataclass
class NoiseResult:
    seed: int
    ratio: float
    otf_filtered: float
    otf_tela: float
    intercepted: float  # share of injected requests caught by the filter
    fallback_unfiltered: float  # share of injected requests on a fallback path without the filter


def noise_robustness(seed: int, ratios=(0.2, 0.5, 0.8), n_disks: int = 5000,
                     sim_config: SimConfig = SimConfig()) -> list[NoiseResult]:
    train, test = corpora(seed, n_disks)
    art = build_artifacts(train, sim_config.K)
    tela = run_policy("tela", test, art, PolicyConfig(K=sim_config.K), sim_config).otf_final
    out = []
    for ratio in ratios:
        reqs = inject_noise(test.requests, ratio, seed)
        ids = noisy_ids(test.requests, reqs)
        on = run_policy("tidal", test, art, PolicyConfig(K=sim_config.K), sim_config, reqs)
        off = run_policy("tidal", test, art, PolicyConfig(K=sim_config.K, use_filter=False),
                         sim_config, reqs)
        caught = sum(1 for d in on.decisions
                     if d["request_id"] in ids and d["path"] == DecisionPath.FALLBACK_FILTERED.value)
        fell_back = sum(1 for d in off.decisions
                        if d["request_id"] in ids and d["path"].startswith("fallback"))
        n = max(1, len(ids))
        out.append(NoiseResult(seed, ratio, on.otf_final, tela, caught / n, fell_back / n))
    return out


def interception_rate(requests, config: PolicyConfig = PolicyConfig()) -> float:
    """Share of ``requests`` the regex filter intercepts."""
    pipe = make_pipeline(config)
    hits = sum(pipe.infer(*r.metadata).source is Source.FILTERED for r in requests)
    return hits / max(1, len(requests))


def estimator_errors(seed: int, n_disks: int = 5000) -> dict[str, tuple[float, float]]:
    """(R^2, MAE) of the lookup regressor and the bucket classifier on held-out disks."""
    train, test = corpora(seed, n_disks)
    fit_pairs, test_pairs = train.spec_intensity_pairs(), test.spec_intensity_pairs()
    return {
        "regressor": evaluate(LookupRegressor().fit(fit_pairs), test_pairs),
        "buckets": evaluate(BucketClassifier().fit(fit_pairs), test_pairs),
    }


def concentration_distance(label: ApplicationClass, n_disks: int, seed: int) -> float:
    """Max-norm gap between the normalized aggregate of ``n_disks`` class disks and the
    class base shape, at the generator's hourly resolution."""
    tpl = {t.label: t for t in default_templates()}[label]
    cfg = GeneratorConfig(n_disks=n_disks, class_mix={label: 1.0}, unknown_fraction=0.0,
                          seed=seed, days=1)
    corpus = generate_corpus(cfg)
    total = np.sum([t.samples for t in corpus.traces.values()], axis=0)
    agg = mean_normalize(aggregate_to_slots(total, GEN_SLOTS))
    return float(np.max(np.abs(agg - tpl.base_shape)))


def concentration_ratio(label: ApplicationClass = ApplicationClass.GAMING, small: int = 4,
                        large: int = 400, seeds=range(20)) -> float:
    r_small = np.mean([concentration_distance(label, small, s) for s in seeds])
    r_large = np.mean([concentration_distance(label, large, s) for s in seeds])
    return float(r_large / r_small)
