"""Glue for experiments: offline artifacts, policy construction and comparisons."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, replace

from .generator import Corpus, default_templates
from .intensity import BucketClassifier, BurstinessLookup, LookupRegressor
from .placement import (
    CapacityBased,
    Oracle,
    PhaseAware,
    Policy,
    PolicyConfig,
    RoundRobin,
    SCDALike,
    TELALike,
)
from .profiles import ProfileLibrary
from .semantics import LexiconClassifier, NoiseFilter, PrefixCache, SemanticPipeline, Source
from .simulator import MetricsReport, SimConfig, Simulation
from .workload import ApplicationClass, ConfigError

DEFAULT_POLICIES = ("rr", "cbp", "scda", "tela", "tidal", "oracle")


@dataclass
class Artifacts:
    """Everything built offline from a training corpus."""

    library: ProfileLibrary
    regressor: LookupRegressor
    buckets: BucketClassifier
    bursty: BurstinessLookup

    def with_slots(self, K: int, train: Corpus | None, labels: dict | None = None) -> "Artifacts":
        if K == self.library.K:
            return self
        if train is None:
            raise ConfigError(f"profiles were built for K={self.library.K}; need the training "
                              f"corpus to rebuild them for K={K}")
        return replace(self, library=build_library(train, K, labels))


def build_library(train: Corpus, K: int, labels: dict | None = None) -> ProfileLibrary:
    """Profile library from a corpus, grouped by ground-truth (or supplied) labels."""
    labels = train.ground_truth.labels if labels is None else labels
    by_class = defaultdict(list)
    for r in train.requests:
        label = labels[r.request_id]
        if label is not ApplicationClass.UNKNOWN:
            by_class[label].append(train.traces[r.request_id])
    return ProfileLibrary.build(dict(sorted(by_class.items(), key=lambda kv: kv[0].value)), K)


def infer_labels(corpus: Corpus, config: PolicyConfig = PolicyConfig()) -> dict:
    """Labels from the semantic pipeline; low-confidence and filtered disks are Unknown."""
    pipe = make_pipeline(config)
    out = {}
    for r in corpus.requests:
        res = pipe.infer(*r.metadata)
        ok = res.source is not Source.FILTERED and res.confidence >= config.tau
        out[r.request_id] = res.label if ok else ApplicationClass.UNKNOWN
    return out


def build_artifacts(train: Corpus, K: int = 12, templates=None,
                    labels: dict | None = None) -> Artifacts:
    """Offline artifacts.

    Intensity models are fitted on ground-truth intensities when the corpus
    has them and on observed trace means otherwise.
    """
    templates = default_templates() if templates is None else templates
    burst_of = {t.label: t.burstiness for t in templates}
    labels = train.ground_truth.labels if labels is None else labels
    has_truth = all(r.request_id in train.ground_truth.intensities for r in train.requests)
    pairs = train.spec_intensity_pairs() if has_truth else train.observed_pairs()
    return Artifacts(
        library=build_library(train, K, labels),
        regressor=LookupRegressor().fit(pairs),
        buckets=BucketClassifier().fit(pairs),
        bursty=BurstinessLookup().fit(
            [(r.spec, burst_of.get(labels[r.request_id], 1.0)) for r in train.requests]
        ),
    )


def make_pipeline(config: PolicyConfig, lexicon=None) -> SemanticPipeline:
    clf = LexiconClassifier(lexicon)
    return SemanticPipeline(
        classifier=clf,
        noise_filter=NoiseFilter(clf.lexicon),
        cache=PrefixCache(lcp_threshold=config.lcp_threshold),
        use_filter=config.use_filter,
    )


def make_policy(name: str, art: Artifacts, config: PolicyConfig = PolicyConfig(),
                n_pods: int = 16, pipeline: SemanticPipeline | None = None) -> Policy:
    """Fresh policy instance; never share one across runs."""
    K = config.K
    if name == "rr":
        return RoundRobin(K, art.buckets)
    if name == "cbp":
        return CapacityBased(K, art.buckets)
    if name == "scda":
        return SCDALike(art.buckets, K)
    if name == "tela":
        return TELALike(art.bursty, art.buckets, K, n_pods)
    if name == "oracle":
        return Oracle(config)
    if name in ("tidal", "tidal-int", "tidal-cap"):
        mode = {"tidal": "full", "tidal-int": "int", "tidal-cap": "cap"}[name]
        return PhaseAware(pipeline or make_pipeline(config), art.regressor, art.library,
                          config, mode)
    raise ConfigError(f"unknown policy {name!r}")


def run_policy(name: str, test: Corpus, art: Artifacts, policy_config: PolicyConfig = PolicyConfig(),
               sim_config: SimConfig = SimConfig(), requests=None) -> MetricsReport:
    if policy_config.K != sim_config.K:
        raise ConfigError("policy and simulator disagree on K")
    policy = make_policy(name, art, policy_config, sim_config.n_pods)
    reqs = test.requests if requests is None else requests
    report = Simulation(reqs, test.traces, policy, sim_config).run()
    if name != policy.name:
        report.policy = name
    return report


def compare(test: Corpus, art: Artifacts, policies=DEFAULT_POLICIES,
            policy_config: PolicyConfig = PolicyConfig(), sim_config: SimConfig = SimConfig(),
            requests=None) -> list[MetricsReport]:
    return [run_policy(p, test, art, policy_config, sim_config, requests) for p in policies]
