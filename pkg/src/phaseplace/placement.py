"""Placement policies.

The phase-aware policy screens pods by a post-placement spatial score, then
picks, among the ``M`` best, the pod whose load vector the new disk's
predicted profile smooths the most (smallest increase of intra-day
variance).  Low-confidence and filtered requests fall back to the pod with
the best spatial score.  Baselines: round-robin, capacity-based, an S-CDA-like
average-load balancer, a TELA-like burst scatterer and a perfect-knowledge
oracle sharing the phase-aware greedy step.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .intensity import BucketClassifier, BurstinessLookup, LookupRegressor
from .profiles import ProfileLibrary, synthesize_profile
from .semantics import SemanticPipeline, SemanticResult, Source
from .workload import ConfigError, ProvisioningRequest, check_slots

log = logging.getLogger(__name__)


class Objective(enum.Enum):
    DELTA_VAR = "delta_var"
    ABS_VAR = "abs_var"
    PEAK = "peak"


class DecisionPath(enum.Enum):
    PHASE_AWARE = "phase_aware"
    FALLBACK_LOW_CONFIDENCE = "fallback_low_confidence"
    FALLBACK_FILTERED = "fallback_filtered"
    BASELINE = "baseline"


@dataclass
class PodState:
    pod_id: int
    capacity_max: float
    bandwidth_max: float
    used_capacity: float
    avg_load: float
    load_vector: np.ndarray

    def __post_init__(self):
        self.load_vector = np.asarray(self.load_vector, dtype=float)
        if self.used_capacity < 0:
            raise ValueError("used_capacity must be >= 0")


@dataclass
class Pods:
    """Column view of a cluster snapshot; row ``i`` is pod ``i``."""

    capacity_max: np.ndarray
    bandwidth_max: np.ndarray
    used_capacity: np.ndarray
    avg_load: np.ndarray
    load_vectors: np.ndarray  # (n_pods, K)

    def __post_init__(self):
        if np.any(self.capacity_max <= 0) or np.any(self.bandwidth_max <= 0):
            raise ValueError("pod capacity and bandwidth limits must be positive")

    def __len__(self):
        return len(self.capacity_max)

    @classmethod
    def from_states(cls, states: Sequence[PodState]) -> "Pods":
        ordered = sorted(states, key=lambda s: s.pod_id)
        if [s.pod_id for s in ordered] != list(range(len(ordered))):
            raise ValueError("pod ids must be 0..N-1")
        return cls(
            np.array([s.capacity_max for s in ordered], dtype=float),
            np.array([s.bandwidth_max for s in ordered], dtype=float),
            np.array([s.used_capacity for s in ordered], dtype=float),
            np.array([s.avg_load for s in ordered], dtype=float),
            np.array([s.load_vector for s in ordered], dtype=float),
        )


def _pods(pods) -> Pods:
    return pods if isinstance(pods, Pods) else Pods.from_states(pods)


@dataclass(frozen=True)
class PolicyConfig:
    candidates: int = 4
    tau: float = 0.6
    spatial_weight: float = 0.5
    lcp_threshold: float = 0.4
    objective: Objective = Objective.DELTA_VAR
    K: int = 12
    use_filter: bool = True
    oracle_screening: bool = True

    def __post_init__(self):
        object.__setattr__(self, "objective", Objective(self.objective))
        if self.candidates < 1:
            raise ConfigError("candidate count M must be >= 1")
        for name in ("tau", "spatial_weight", "lcp_threshold"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(f"{name} must lie in [0, 1]")
        check_slots(self.K)


@dataclass
class PlacementDecision:
    pod_id: int
    path: DecisionPath
    objective_value: float = float("nan")
    spatial_score_of_chosen: float = float("nan")
    candidates: tuple[int, ...] = ()
    intensity: float = 0.0
    predicted_profile: np.ndarray | None = field(default=None, repr=False)
    semantic: SemanticResult | None = None


# --------------------------------------------------------------------------- temporal


def variance(L: np.ndarray) -> float:
    L = np.asarray(L, dtype=float)
    return float(((L - L.mean()) ** 2).mean())


def delta_var(L: np.ndarray, profile: np.ndarray) -> float:
    """var(L + l) - var(L), computed from the moments of ``l`` and the cross term only."""
    L = np.asarray(L, dtype=float)
    profile = np.asarray(profile, dtype=float)
    if L.shape != profile.shape:
        raise ValueError("load vector and profile lengths differ")
    lc = profile - profile.mean()
    return float((lc * lc).mean() + 2.0 * ((L - L.mean()) * lc).mean())


def _objective_values(objective: Objective, loads: np.ndarray, profile: np.ndarray) -> np.ndarray:
    if objective is Objective.DELTA_VAR:
        lc = profile - profile.mean()
        centered = loads - loads.mean(axis=1, keepdims=True)
        return (lc * lc).mean() + 2.0 * (centered * lc).mean(axis=1)
    after = loads + profile
    if objective is Objective.ABS_VAR:
        return after.var(axis=1)
    return after.max(axis=1)


# --------------------------------------------------------------------------- spatial


def _cov_rows(m: np.ndarray) -> np.ndarray:
    mean = m.mean(axis=1)
    std = m.std(axis=1)
    out = np.zeros_like(mean)
    nz = mean != 0
    out[nz] = std[nz] / mean[nz]
    return out


def _post_matrices(p: Pods, size: float, intensity: float):
    """Row ``t``: every pod's (cap, load) utilization if the disk went to pod ``t``."""
    n = len(p)
    cap = p.used_capacity / p.capacity_max
    load = p.avg_load / p.bandwidth_max
    cap_m = np.tile(cap, (n, 1))
    load_m = np.tile(load, (n, 1))
    idx = np.arange(n)
    cap_m[idx, idx] = (p.used_capacity + size) / p.capacity_max
    load_m[idx, idx] = (p.avg_load + intensity) / p.bandwidth_max
    return cap_m, load_m


def post_utilizations(pods, target: int, size: float, intensity: float):
    """Per-pod (cap, load) utilization arrays after tentatively placing on ``target``."""
    cap_m, load_m = _post_matrices(_pods(pods), size, intensity)
    return cap_m[target], load_m[target]


def spatial_scores(pods, size: float, intensity: float, spatial_weight: float = 0.5) -> np.ndarray:
    """Score of every pod as placement target; lower is better."""
    cap_m, load_m = _post_matrices(_pods(pods), size, intensity)
    idx = np.arange(len(cap_m))
    intra = np.abs(cap_m[idx, idx] - load_m[idx, idx])
    inter = _cov_rows(cap_m) + _cov_rows(load_m)
    return spatial_weight * intra + (1.0 - spatial_weight) * inter


def spatial_score(pods, target: int, size: float, intensity: float,
                  spatial_weight: float = 0.5) -> float:
    return float(spatial_scores(pods, size, intensity, spatial_weight)[target])


def _rank(scores: np.ndarray) -> np.ndarray:
    return np.lexsort((np.arange(len(scores)), scores))


def select_spatial_candidates(pods, size: float, intensity: float, M: int,
                              spatial_weight: float = 0.5) -> list[int]:
    if M < 1:
        raise ConfigError("M must be >= 1")
    scores = spatial_scores(pods, size, intensity, spatial_weight)
    return [int(i) for i in _rank(scores)[:M]]


def spatial_fallback(pods, size: float, intensity: float, spatial_weight: float = 0.5) -> int:
    scores = spatial_scores(pods, size, intensity, spatial_weight)
    return int(_rank(scores)[0])


def _argmin_first(values: np.ndarray) -> int:
    # np.argmin returns the first minimum, i.e. the lowest index on ties
    return int(np.argmin(values))


def phase_aware_choice(pods, size: float, intensity: float, profile: np.ndarray,
                       config: PolicyConfig, screening: bool = True):
    """Greedy step: best objective within the top-M spatial candidates.

    Returns ``(pod_id, objective_value, candidates, scores)``.
    """
    p = _pods(pods)
    scores = spatial_scores(p, size, intensity, config.spatial_weight)
    if screening:
        cands = np.sort(_rank(scores)[: config.candidates])
    else:
        cands = np.arange(len(p))
    values = _objective_values(config.objective, p.load_vectors[cands], np.asarray(profile))
    j = _argmin_first(values)
    return int(cands[j]), float(values[j]), tuple(int(c) for c in cands), scores


# --------------------------------------------------------------------------- policies


@dataclass
class DecisionContext:
    """Side information a policy may read; only the oracle uses the true fields."""

    true_profile: np.ndarray | None = None
    true_intensity: float | None = None


def _flat(value: float, K: int) -> np.ndarray:
    return np.full(K, float(value))


class Policy:
    name = "policy"
    needs_truth = False

    def decide(self, request: ProvisioningRequest, ctx: DecisionContext,
               pods: Pods) -> PlacementDecision:
        raise NotImplementedError


class RoundRobin(Policy):
    name = "rr"

    def __init__(self, K: int = 12, estimator: BucketClassifier | None = None):
        self.cursor = 0
        self.K = K
        self.estimator = estimator

    def decide(self, request, ctx, pods):
        pod = self.cursor % len(pods)
        self.cursor += 1
        est = self.estimator.predict(request.spec) if self.estimator else 0.0
        return PlacementDecision(pod, DecisionPath.BASELINE, intensity=est,
                                 predicted_profile=_flat(est, self.K))


class CapacityBased(Policy):
    name = "cbp"

    def __init__(self, K: int = 12, estimator: BucketClassifier | None = None):
        self.K = K
        self.estimator = estimator

    def decide(self, request, ctx, pods):
        pod = _argmin_first(pods.used_capacity / pods.capacity_max)
        est = self.estimator.predict(request.spec) if self.estimator else 0.0
        return PlacementDecision(pod, DecisionPath.BASELINE, intensity=est,
                                 predicted_profile=_flat(est, self.K))


class SCDALike(Policy):
    """Balances average load using coarse bucketed intensity estimates."""

    name = "scda"

    def __init__(self, estimator: BucketClassifier, K: int = 12):
        self.estimator = estimator
        self.K = K

    def decide(self, request, ctx, pods):
        est = self.estimator.predict(request.spec)
        pod = _argmin_first((pods.avg_load + est) / pods.bandwidth_max)
        return PlacementDecision(pod, DecisionPath.BASELINE, intensity=est,
                                 predicted_profile=_flat(est, self.K))


class TELALike(Policy):
    """Scatters disks predicted to be bursty; others go to the least loaded pod.

    An approximation from a one-line description, not the original system.
    """

    name = "tela"

    def __init__(self, bursty: BurstinessLookup, estimator: BucketClassifier | None = None,
                 K: int = 12, n_pods: int | None = None):
        self.bursty = bursty
        self.estimator = estimator
        self.K = K
        self.bursty_counts: np.ndarray | None = None if n_pods is None else np.zeros(n_pods, int)

    def decide(self, request, ctx, pods):
        if self.bursty_counts is None or len(self.bursty_counts) != len(pods):
            self.bursty_counts = np.zeros(len(pods), dtype=int)
        est = self.estimator.predict(request.spec) if self.estimator else 0.0
        if self.bursty.is_bursty(request.spec):
            pod = _argmin_first(self.bursty_counts)
            self.bursty_counts[pod] += 1
        else:
            pod = _argmin_first(pods.avg_load / pods.bandwidth_max)
        return PlacementDecision(pod, DecisionPath.BASELINE, intensity=est,
                                 predicted_profile=_flat(est, self.K))


class PhaseAware(Policy):
    """Semantic, phase-aware placement with confidence fallback.

    ``mode`` selects ablations: ``"full"``, ``"int"`` (spatial fallback for every
    request, no semantics) or ``"cap"`` (capacity-based only).
    """

    name = "tidal"

    def __init__(self, pipeline: SemanticPipeline, estimator: LookupRegressor,
                 library: ProfileLibrary, config: PolicyConfig = PolicyConfig(),
                 mode: str = "full"):
        if mode not in ("full", "int", "cap"):
            raise ConfigError(f"unknown mode {mode!r}")
        if library.K != config.K:
            raise ConfigError(f"library has K={library.K}, policy expects K={config.K}")
        self.pipeline = pipeline
        self.estimator = estimator
        self.library = library
        self.config = config
        self.mode = mode
        if mode != "full":
            self.name = f"tidal-{mode}"

    def decide(self, request, ctx, pods):
        cfg = self.config
        est = self.estimator.predict(request.spec)
        if self.mode == "cap":
            pod = _argmin_first(pods.used_capacity / pods.capacity_max)
            return PlacementDecision(pod, DecisionPath.BASELINE, intensity=est,
                                     predicted_profile=_flat(est, cfg.K))
        sem = self.pipeline.infer(*request.metadata) if self.mode == "full" else None
        return place_tidal(request, sem, est, self.library, pods, cfg)


def place_tidal(request: ProvisioningRequest, semantic: SemanticResult | None,
                intensity: float, library: ProfileLibrary, pods,
                config: PolicyConfig = PolicyConfig()) -> PlacementDecision:
    """One placement decision; ``semantic=None`` forces the spatial fallback."""
    pods = _pods(pods)
    size = request.spec.capacity_gb
    path = pattern = None
    if semantic is None:
        path = DecisionPath.FALLBACK_LOW_CONFIDENCE
    elif semantic.source is Source.FILTERED:
        path = DecisionPath.FALLBACK_FILTERED
    elif semantic.confidence < config.tau:
        path = DecisionPath.FALLBACK_LOW_CONFIDENCE
    else:
        pattern = library.get(semantic.label)
        if pattern is None:
            log.info("no pattern for %s; falling back", semantic.label.value)
            path = DecisionPath.FALLBACK_LOW_CONFIDENCE
    if path is not None:
        scores = spatial_scores(pods, size, intensity, config.spatial_weight)
        pod = int(_rank(scores)[0])
        return PlacementDecision(pod, path, spatial_score_of_chosen=float(scores[pod]),
                                 intensity=intensity, predicted_profile=_flat(intensity, config.K),
                                 semantic=semantic)
    profile = synthesize_profile(intensity, pattern)
    pod, value, cands, scores = phase_aware_choice(pods, size, intensity, profile, config)
    return PlacementDecision(pod, DecisionPath.PHASE_AWARE, value, float(scores[pod]), cands,
                             intensity, profile, semantic)


class Oracle(Policy):
    """Phase-aware greedy step fed with each disk's true future slot profile."""

    name = "oracle"
    needs_truth = True

    def __init__(self, config: PolicyConfig = PolicyConfig()):
        self.config = config

    def decide(self, request, ctx, pods):
        if ctx.true_profile is None:
            raise ValueError("oracle needs the true profile")
        profile = np.asarray(ctx.true_profile, dtype=float)
        est = float(profile.mean())
        pod, value, cands, scores = phase_aware_choice(
            pods, request.spec.capacity_gb, est, profile, self.config,
            screening=self.config.oracle_screening,
        )
        return PlacementDecision(pod, DecisionPath.PHASE_AWARE, value, float(scores[pod]), cands,
                                 est, profile)


POLICY_NAMES = ("rr", "cbp", "scda", "tela", "tidal", "oracle", "tidal-int", "tidal-cap")


def place_baseline(policy: Policy, request: ProvisioningRequest, context: DecisionContext,
                   pods) -> PlacementDecision:
    return policy.decide(request, context, _pods(pods))
