"""Load-intensity prediction from resource specifications.

``LookupRegressor`` is the scalar regressor used for placement.
``BucketClassifier`` quantizes intensity into coarse buckets (the S-CDA style
baseline) and ``NoisyOracle`` perturbs the true value for sensitivity runs.
``BurstinessLookup`` is the spec-keyed burst flag used by the TELA-like policy.
"""

from __future__ import annotations

import csv
import io
import math
import os
from collections import Counter, defaultdict
from pathlib import Path
from typing import Sequence

import numpy as np

from .workload import ConfigError, ResourceSpec

DEFAULT_KEY = "*"


def _bucket(value: int, uppers: Sequence[int], labels: Sequence[str]) -> str:
    for upper, label in zip(uppers, labels):
        if value <= upper:
            return label
    return labels[-1]


def featurize(spec: ResourceSpec) -> str:
    """Deterministic bucketed feature key; bucket upper bounds are inclusive."""
    vcpu = _bucket(spec.vcpu_count, (2, 4, 8), ("v1-2", "v3-4", "v5-8", "v9+"))
    mem = _bucket(spec.memory_gb, (4, 16, 64), ("m<=4", "m<=16", "m<=64", "m>64"))
    cap = _bucket(spec.capacity_gb, (128, 512, 2048), ("c<=128", "c<=512", "c<=2048", "c>2048"))
    lease = _bucket(spec.lease_days, (30, 365), ("l<=30", "l<=365", "l>365"))
    return "|".join((vcpu, mem, cap, spec.disk_role.value, spec.media_type.value, lease))


def _check_pairs(pairs):
    if not pairs:
        raise ValueError("cannot fit on an empty training set")
    for _, y in pairs:
        if y < 0:
            raise ValueError("training intensities must be >= 0")


class LookupRegressor:
    """Per-feature-key mean intensity, global mean for unseen keys."""

    variant = "lookup_regressor"

    def __init__(self):
        self.table: dict[str, tuple[float, int]] = {}

    def fit(self, pairs: Sequence[tuple[ResourceSpec, float]]) -> "LookupRegressor":
        _check_pairs(pairs)
        groups: dict[str, list[float]] = defaultdict(list)
        for spec, y in pairs:
            groups[featurize(spec)].append(float(y))
        self.table = {k: (math.fsum(v) / len(v), len(v)) for k, v in sorted(groups.items())}
        ys = [float(y) for _, y in pairs]
        self.table[DEFAULT_KEY] = (math.fsum(ys) / len(ys), len(ys))
        return self

    def predict(self, spec: ResourceSpec, true_intensity: float | None = None) -> float:
        if not self.table:
            raise RuntimeError("model is not fitted")
        return self.table.get(featurize(spec), self.table[DEFAULT_KEY])[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["feature_key", "mean_kbps", "count"])
        for k, (m, n) in self.table.items():
            w.writerow([k, repr(m), n])
        return buf.getvalue()

    def save(self, path: str | os.PathLike):
        Path(path).write_text(self.to_csv())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "LookupRegressor":
        rows = list(csv.DictReader(Path(path).read_text().splitlines()))
        model = cls()
        model.table = {r["feature_key"]: (float(r["mean_kbps"]), int(r["count"])) for r in rows}
        if DEFAULT_KEY not in model.table:
            raise ConfigError(f"{path}: missing default row '{DEFAULT_KEY}'")
        return model


class BucketClassifier:
    """Majority intensity bucket per feature key, predicted as that bucket's midpoint.

    Boundaries default to the training quartiles. A bucket's midpoint is the
    median of the training intensities that fall inside it.
    """

    variant = "bucket_classifier"

    def __init__(self, boundaries: Sequence[float] | None = None,
                 midpoints: Sequence[float] | None = None):
        self.boundaries = None if boundaries is None else np.asarray(boundaries, dtype=float)
        self.midpoints = None if midpoints is None else np.asarray(midpoints, dtype=float)
        if self.boundaries is not None and self.midpoints is not None \
                and len(self.midpoints) != len(self.boundaries) + 1:
            raise ConfigError("need exactly one more midpoint than boundaries")
        self.table: dict[str, int] = {}

    def bucket_of(self, value: float) -> int:
        # bucket i holds values in (b[i-1], b[i]]
        return int(np.searchsorted(self.boundaries, value, side="left"))

    def quantize(self, value: float) -> float:
        return float(self.midpoints[self.bucket_of(value)])

    def fit(self, pairs: Sequence[tuple[ResourceSpec, float]]) -> "BucketClassifier":
        _check_pairs(pairs)
        ys = np.array([float(y) for _, y in pairs])
        if self.boundaries is None:
            self.boundaries = np.quantile(ys, [0.25, 0.5, 0.75])
        buckets = np.searchsorted(self.boundaries, ys, side="left")
        if self.midpoints is None:
            mids = []
            for b in range(len(self.boundaries) + 1):
                inside = ys[buckets == b]
                if len(inside):
                    mids.append(float(np.median(inside)))
                else:
                    lo = self.boundaries[b - 1] if b > 0 else 0.0
                    hi = self.boundaries[b] if b < len(self.boundaries) else lo
                    mids.append(float((lo + hi) / 2))
            self.midpoints = np.array(mids)
        votes: dict[str, Counter] = defaultdict(Counter)
        for (spec, _), b in zip(pairs, buckets):
            votes[featurize(spec)][int(b)] += 1
        self.table = {k: min(c, key=lambda b: (-c[b], b)) for k, c in sorted(votes.items())}
        mean = ys.mean()
        self.table[DEFAULT_KEY] = int(np.argmin(np.abs(self.midpoints - mean)))
        return self

    def predict_bucket(self, spec: ResourceSpec) -> int:
        if not self.table:
            raise RuntimeError("model is not fitted")
        return self.table.get(featurize(spec), self.table[DEFAULT_KEY])

    def predict(self, spec: ResourceSpec, true_intensity: float | None = None) -> float:
        return float(self.midpoints[self.predict_bucket(spec)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["feature_key", "bucket", "mean_kbps"])
        w.writerow(["#boundaries", "", ";".join(repr(float(b)) for b in self.boundaries)])
        for k, b in self.table.items():
            w.writerow([k, b, repr(float(self.midpoints[b]))])
        return buf.getvalue()

    def save(self, path: str | os.PathLike):
        Path(path).write_text(self.to_csv())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "BucketClassifier":
        rows = list(csv.DictReader(Path(path).read_text().splitlines()))
        if not rows or rows[0]["feature_key"] != "#boundaries":
            raise ConfigError(f"{path}: missing boundaries row")
        bounds = [float(x) for x in rows[0]["mean_kbps"].split(";")]
        mids: dict[int, float] = {}
        table = {}
        for r in rows[1:]:
            b = int(r["bucket"])
            table[r["feature_key"]] = b
            mids[b] = float(r["mean_kbps"])
        model = cls(bounds)
        # buckets no key predicts are never looked up; fill them for shape only
        model.midpoints = np.array([mids.get(b, math.nan) for b in range(len(bounds) + 1)])
        model.table = table
        return model


class NoisyOracle:
    """True intensity times exp(sigma * g), g standard normal seeded per request."""

    variant = "noisy_oracle"

    def __init__(self, sigma: float = 0.0, seed: int = 0):
        if sigma < 0:
            raise ConfigError("sigma must be >= 0")
        self.sigma = sigma
        self.seed = seed

    def fit(self, pairs=()) -> "NoisyOracle":
        return self

    def predict(self, spec: ResourceSpec, true_intensity: float | None = None,
                draw_id: int = 0) -> float:
        if true_intensity is None:
            raise ValueError("the oracle estimator needs the true intensity")
        if self.sigma == 0:
            return float(true_intensity)
        g = np.random.default_rng([self.seed, draw_id]).standard_normal()
        return float(true_intensity * math.exp(g * self.sigma))


def make_estimator(variant: str, **kw):
    if variant == "lookup_regressor":
        return LookupRegressor()
    if variant == "bucket_classifier":
        return BucketClassifier(**kw)
    if variant == "noisy_oracle":
        return NoisyOracle(**kw)
    raise ConfigError(f"unknown estimator variant {variant!r}")


def evaluate(model, test_pairs: Sequence[tuple[ResourceSpec, float]]) -> tuple[float, float]:
    """(R^2, MAE) of the model on held-out pairs."""
    if len(test_pairs) < 2:
        raise ValueError("need at least two test pairs")
    y = np.array([float(t) for _, t in test_pairs])
    yhat = np.array([model.predict(s, t) for s, t in test_pairs])
    sst = float(((y - y.mean()) ** 2).sum())
    if sst == 0:
        raise ValueError("R^2 is undefined for zero-variance truth")
    sse = float(((y - yhat) ** 2).sum())
    return 1.0 - sse / sst, float(np.abs(y - yhat).mean())


class BurstinessLookup:
    """Spec-keyed majority vote on whether a disk's class shape is bursty."""

    def __init__(self, threshold: float = 2.0):
        self.threshold = threshold
        self.table: dict[str, bool] = {}

    def fit(self, pairs: Sequence[tuple[ResourceSpec, float]]) -> "BurstinessLookup":
        """``pairs`` hold (spec, class-template burstiness)."""
        if not pairs:
            raise ValueError("cannot fit on an empty training set")
        votes: dict[str, list[int]] = defaultdict(lambda: [0, 0])
        total = [0, 0]
        for spec, burst in pairs:
            flag = int(burst >= self.threshold)
            votes[featurize(spec)][flag] += 1
            total[flag] += 1
        self.table = {k: v[1] > v[0] for k, v in sorted(votes.items())}
        self.table[DEFAULT_KEY] = total[1] > total[0]
        return self

    def is_bursty(self, spec: ResourceSpec) -> bool:
        return self.table.get(featurize(spec), self.table[DEFAULT_KEY])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["feature_key", "bursty"])
        for k, v in self.table.items():
            w.writerow([k, int(v)])
        return buf.getvalue()

    def save(self, path: str | os.PathLike):
        Path(path).write_text(self.to_csv())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "BurstinessLookup":
        rows = list(csv.DictReader(Path(path).read_text().splitlines()))
        m = cls()
        m.table = {r["feature_key"]: r["bursty"] == "1" for r in rows}
        return m
