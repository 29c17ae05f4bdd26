"""Trace-driven, chronological replay of provisioning requests and disk I/O.

Time advances in 5-minute ticks.  Requests arriving during a tick are placed
first and start contributing to their pod in that same tick.  Pod load
vectors handed to policies come from a trailing monitoring window; slots the
window has not observed yet fall back to the sum of predicted profiles of
the pod's disks.  In the default ``pending_disks`` warm-up, observed slots are
also topped up with the predicted profiles of disks placed after the slot
was last observed, so the pod state does not lag behind recent placements.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .placement import DecisionContext, DecisionPath, PlacementDecision, Pods, Policy
from .workload import (
    DAY_S,
    SAMPLE_PERIOD_S,
    ConfigError,
    DiskTrace,
    ProvisioningRequest,
    aggregate_to_slots,
    check_slots,
)

DEFAULT_CHECKPOINTS = tuple(round(0.86 + 0.02 * i, 2) for i in range(8))


@dataclass(frozen=True)
class SimConfig:
    n_pods: int = 16
    K: int = 12
    budget_factor: float = 1.2
    # storage headroom is generous so bandwidth is the binding resource
    capacity_factor: float = 8.0
    monitoring_window_s: int = DAY_S
    horizon_s: int = 8 * DAY_S
    progress_checkpoints: tuple[float, ...] = DEFAULT_CHECKPOINTS
    seed: int = 0
    warmup: str = "pending_disks"
    log_snapshots: bool = True

    def __post_init__(self):
        if self.n_pods < 1:
            raise ConfigError("n_pods must be >= 1")
        if not self.budget_factor > 0:
            raise ConfigError("budget_factor must be > 0")
        if not self.capacity_factor > 0:
            raise ConfigError("capacity_factor must be > 0")
        if self.monitoring_window_s < SAMPLE_PERIOD_S or self.horizon_s < SAMPLE_PERIOD_S:
            raise ConfigError("monitoring window and horizon must cover at least one sample")
        if self.warmup not in ("unobserved_slots", "pending_disks"):
            raise ConfigError(f"unknown warmup mode {self.warmup!r}")
        object.__setattr__(self, "progress_checkpoints", tuple(self.progress_checkpoints))
        check_slots(self.K)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["progress_checkpoints"] = list(self.progress_checkpoints)
        return d


@dataclass(frozen=True)
class OverloadEpisode:
    pod_id: int
    start_s: int
    duration_s: int


def compute_pod_capacity(traces, n_pods: int, budget_factor: float) -> float:
    """Uniform per-pod bandwidth: budget_factor x total mean throughput / n_pods."""
    traces = list(traces.values()) if isinstance(traces, dict) else list(traces)
    if not traces:
        raise ValueError("empty workload")
    total = math.fsum(float(np.asarray(getattr(t, "samples", t)).mean()) for t in traces)
    return budget_factor * total / n_pods


class MonitoringStore:
    """Per-pod ring buffer of 5-minute aggregate samples over a trailing window."""

    def __init__(self, n_pods: int, window_s: int = DAY_S):
        self.size = window_s // SAMPLE_PERIOD_S
        self.values = np.zeros((n_pods, self.size))
        self.times = np.full(self.size, -1, dtype=np.int64)
        self.count = 0

    def append(self, time_s: int, aggregates: np.ndarray):
        if self.count and time_s <= self.times[(self.count - 1) % self.size]:
            raise ValueError("monitoring samples must be time-ordered")
        pos = self.count % self.size
        self.values[:, pos] = aggregates
        self.times[pos] = time_s
        self.count += 1

    def __len__(self):
        return min(self.count, self.size)

    def slot_stats(self, K: int):
        """(sums, counts, last_time): per-pod slot sums, per-slot sample counts and the
        most recent sample time seen in each slot (-1 if none)."""
        n = len(self)
        times = self.times[:n]
        vals = self.values[:, :n]
        slots = ((times % DAY_S) // (DAY_S // K)).astype(int)
        onehot = np.zeros((n, K))
        onehot[np.arange(n), slots] = 1.0
        sums = vals @ onehot
        counts = onehot.sum(axis=0)
        last = np.full(K, -1, dtype=np.int64)
        np.maximum.at(last, slots, times)
        return sums, counts, last


def pod_load_vector(store: MonitoringStore, pod: int, sim_time: float, K: int,
                    predicted_ledger) -> np.ndarray:
    """Observed slot means for one pod; unobserved slots use the summed predictions."""
    sums, counts, _ = store.slot_stats(K)
    ledger = np.zeros(K)
    for prof in predicted_ledger:
        ledger = ledger + np.asarray(prof, dtype=float)
    out = ledger.copy()
    seen = counts > 0
    out[seen] = sums[pod, seen] / counts[seen]
    return out


def otf(overloaded: np.ndarray) -> float:
    """Fraction of pod-intervals that were overloaded."""
    overloaded = np.asarray(overloaded, dtype=bool)
    if overloaded.size == 0:
        raise ValueError("no intervals observed")
    return float(overloaded.sum() / overloaded.size)


def _cov(x: np.ndarray, axis=None) -> np.ndarray:
    mean = np.mean(x, axis=axis)
    std = np.std(x, axis=axis)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(mean == 0, 0.0, std / np.where(mean == 0, 1.0, mean))


def imbalance_metrics(series: np.ndarray) -> tuple[float, float, np.ndarray]:
    """(spatial, temporal, per-pod temporal) from an (n_pods, n_ticks) throughput matrix."""
    series = np.atleast_2d(np.asarray(series, dtype=float))
    spatial = float(_cov(series.mean(axis=1)))
    per_pod = np.atleast_1d(_cov(series, axis=1)).astype(float)
    return spatial, float(per_pod.mean()), per_pod


def find_episodes(overloaded: np.ndarray, start_tick: int = 0) -> list[OverloadEpisode]:
    """Maximal runs of consecutive overloaded intervals, per pod."""
    eps = []
    for pod, row in enumerate(np.atleast_2d(overloaded)):
        padded = np.concatenate(([0], row.astype(np.int8), [0]))
        edges = np.diff(padded)
        for s, e in zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)):
            eps.append(OverloadEpisode(pod, int(start_tick + s) * SAMPLE_PERIOD_S,
                                       int(e - s) * SAMPLE_PERIOD_S))
    return eps


def episode_percentiles(episodes, q: float) -> int:
    """Nearest-rank percentile of episode durations; 0 when there are none."""
    durations = sorted(e.duration_s if isinstance(e, OverloadEpisode) else e for e in episodes)
    if not durations:
        return 0
    rank = max(1, math.ceil(q / 100.0 * len(durations)))
    return int(durations[rank - 1])


@dataclass
class MetricsReport:
    policy: str
    checkpoint_otf: dict[float, float]
    episodes: list[OverloadEpisode]
    otf_final: float
    p95_duration_s: int
    p99_duration_s: int
    spatial_imbalance: float
    temporal_imbalance: float
    temporal_per_pod: list[float]
    decisions: list[dict] = field(repr=False)
    bandwidth_max: float = 0.0
    capacity_max: float = 0.0
    path_counts: dict[str, int] = field(default_factory=dict)
    semantic_stats: dict[str, int] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def metric_rows(self) -> list[tuple[str, str, str]]:
        rows = [
            ("otf_final", self.otf_final),
            ("p95_duration_s", self.p95_duration_s),
            ("p99_duration_s", self.p99_duration_s),
            ("episodes", len(self.episodes)),
            ("spatial_imbalance", self.spatial_imbalance),
            ("temporal_imbalance", self.temporal_imbalance),
        ]
        rows += [(f"otf@{f:.2f}", v) for f, v in sorted(self.checkpoint_otf.items())]
        rows += [(f"path.{k}", v) for k, v in sorted(self.path_counts.items())]
        rows += [(f"semantic.{k}", v) for k, v in sorted(self.semantic_stats.items())]
        return [(self.policy, name, _fmt(v)) for name, v in rows]

    def to_json(self) -> dict:
        return {
            "policy": self.policy,
            "config": self.config,
            "bandwidth_max": self.bandwidth_max,
            "capacity_max": self.capacity_max,
            "otf_final": self.otf_final,
            "checkpoint_otf": {f"{k:.2f}": v for k, v in sorted(self.checkpoint_otf.items())},
            "p95_duration_s": self.p95_duration_s,
            "p99_duration_s": self.p99_duration_s,
            "spatial_imbalance": self.spatial_imbalance,
            "temporal_imbalance": self.temporal_imbalance,
            "temporal_per_pod": self.temporal_per_pod,
            "path_counts": self.path_counts,
            "semantic_stats": self.semantic_stats,
            "episodes": [asdict(e) for e in self.episodes],
        }


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def metrics_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["policy", "metric", "value"])
    for r in reports:
        w.writerows(r.metric_rows())
    return buf.getvalue()


def decisions_jsonl(report: MetricsReport) -> str:
    return "".join(json.dumps(d, sort_keys=True) + "\n" for d in report.decisions)


class Simulation:
    """One run of one policy over one workload.  Not reusable."""

    def __init__(self, requests: list[ProvisioningRequest], traces: dict[int, DiskTrace],
                 policy: Policy, config: SimConfig = SimConfig()):
        self.requests = sorted(requests, key=lambda r: (r.arrival_time_s, r.request_id))
        missing = [r.request_id for r in self.requests if r.request_id not in traces]
        if missing:
            raise KeyError(f"no trace for requests {missing[:5]}")
        self.traces = traces
        self.policy = policy
        self.config = config
        self.K = config.K
        n = config.n_pods
        used = [traces[r.request_id] for r in self.requests]
        self.bandwidth_max = compute_pod_capacity(used, n, config.budget_factor)
        total_cap = math.fsum(r.spec.capacity_gb for r in self.requests)
        self.capacity_max = config.capacity_factor * total_cap / n
        self.n_ticks = config.horizon_s // SAMPLE_PERIOD_S
        self.store = MonitoringStore(n, config.monitoring_window_s)
        self.used_capacity = np.zeros(n)
        self.ledger = np.zeros((n, self.K))
        # ledger snapshot after each tick, for the pending-disks warm-up mode
        self.ledger_hist = np.zeros((self.n_ticks, n, self.K)) \
            if config.warmup == "pending_disks" else None
        # per distinct trace length: summed traces of the disks on each pod
        self.pod_traces: dict[int, np.ndarray] = {}
        self.assignment: dict[int, int] = {}

    def _load_vectors(self, tick: int) -> np.ndarray:
        if len(self.store) == 0:
            return self.ledger.copy()
        sums, counts, last = self.store.slot_stats(self.K)
        seen = counts > 0
        out = self.ledger.copy()
        out[:, seen] = sums[:, seen] / counts[seen]
        if self.ledger_hist is not None:
            for k in np.flatnonzero(seen):
                t_k = int(last[k]) // SAMPLE_PERIOD_S
                out[:, k] += self.ledger[:, k] - self.ledger_hist[t_k, :, k]
        return out

    def _snapshot(self, tick: int) -> Pods:
        lv = self._load_vectors(tick)
        return Pods(
            np.full(self.config.n_pods, self.capacity_max),
            np.full(self.config.n_pods, self.bandwidth_max),
            self.used_capacity.copy(),
            lv.mean(axis=1),
            lv,
        )

    def _context(self, req: ProvisioningRequest) -> DecisionContext:
        if not self.policy.needs_truth:
            return DecisionContext()
        tr = self.traces[req.request_id]
        prof = aggregate_to_slots(tr, self.K)
        return DecisionContext(true_profile=prof, true_intensity=float(prof.mean()))

    def _place(self, req: ProvisioningRequest, tick: int) -> dict:
        pods = self._snapshot(tick)
        dec: PlacementDecision = self.policy.decide(req, self._context(req), pods)
        pod = dec.pod_id
        if not 0 <= pod < self.config.n_pods:
            raise RuntimeError(f"policy {self.policy.name} chose invalid pod {pod}")
        self.assignment[req.request_id] = pod
        self.used_capacity[pod] += req.spec.capacity_gb
        if dec.predicted_profile is not None:
            self.ledger[pod] += dec.predicted_profile
        samples = self.traces[req.request_id].samples
        mat = self.pod_traces.setdefault(len(samples), np.zeros((self.config.n_pods, len(samples))))
        mat[pod] += samples
        entry = {
            "request_id": req.request_id,
            "tick": tick,
            "pod_id": pod,
            "path": dec.path.value,
            "objective_value": None if math.isnan(dec.objective_value) else dec.objective_value,
            "spatial_score": None if math.isnan(dec.spatial_score_of_chosen)
            else dec.spatial_score_of_chosen,
            "candidates": list(dec.candidates),
            "intensity": float(dec.intensity),
            "size_gb": req.spec.capacity_gb,
        }
        if dec.semantic is not None:
            entry.update(label=dec.semantic.label.value, confidence=dec.semantic.confidence,
                         source=dec.semantic.source.value)
        if self.config.log_snapshots and dec.path is not DecisionPath.BASELINE:
            entry["pods_used_capacity"] = pods.used_capacity.tolist()
            entry["pods_avg_load"] = pods.avg_load.tolist()
        return entry

    def run(self) -> MetricsReport:
        cfg = self.config
        n_pods, n_ticks = cfg.n_pods, self.n_ticks
        series = np.zeros((n_pods, n_ticks))
        decisions = []
        n_req = len(self.requests)
        targets = {f: max(1, math.ceil(f * n_req - 1e-9)) for f in cfg.progress_checkpoints}
        reached: dict[float, int] = {}
        nxt = 0
        last_arrival_tick = 0
        for tick in range(n_ticks):
            t = tick * SAMPLE_PERIOD_S
            while nxt < n_req and self.requests[nxt].arrival_time_s < t + SAMPLE_PERIOD_S:
                decisions.append(self._place(self.requests[nxt], tick))
                nxt += 1
                last_arrival_tick = tick
                for f, need in targets.items():
                    if f not in reached and nxt >= need:
                        reached[f] = tick
            agg = np.zeros(n_pods)
            for length, mat in self.pod_traces.items():
                agg += mat[:, tick % length]
            series[:, tick] = agg
            self.store.append(t, agg)
            if self.ledger_hist is not None:
                self.ledger_hist[tick] = self.ledger
        if nxt < n_req:
            raise ConfigError(f"{n_req - nxt} requests arrive after the simulation horizon")

        overloaded = series > self.bandwidth_max
        checkpoint_otf = {f: otf(overloaded[:, : reached[f] + 1]) for f in sorted(reached)}
        episodes = find_episodes(overloaded)
        steady = series[:, last_arrival_tick + 1:] if last_arrival_tick + 1 < n_ticks else series
        spatial, temporal, per_pod = imbalance_metrics(steady)
        paths: dict[str, int] = {}
        for d in decisions:
            paths[d["path"]] = paths.get(d["path"], 0) + 1
        pipeline = getattr(self.policy, "pipeline", None)
        sem_stats = asdict(pipeline.stats) if pipeline is not None and \
            getattr(self.policy, "mode", "full") == "full" else {}
        self.series = series
        self.overloaded = overloaded
        return MetricsReport(
            policy=self.policy.name,
            checkpoint_otf=checkpoint_otf,
            episodes=episodes,
            otf_final=otf(overloaded),
            p95_duration_s=episode_percentiles(episodes, 95),
            p99_duration_s=episode_percentiles(episodes, 99),
            spatial_imbalance=spatial,
            temporal_imbalance=temporal,
            temporal_per_pod=per_pod.tolist(),
            decisions=decisions,
            bandwidth_max=self.bandwidth_max,
            capacity_max=self.capacity_max,
            path_counts=paths,
            semantic_stats=sem_stats,
            config=cfg.to_dict(),
        )


def run(requests, traces, policy: Policy, config: SimConfig = SimConfig()) -> MetricsReport:
    return Simulation(requests, traces, policy, config).run()
