"""Offline library of canonical per-class daily patterns and profile synthesis."""

from __future__ import annotations

import csv
import io
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .workload import ApplicationClass, ConfigError, DiskTrace, aggregate_to_slots, check_slots

log = logging.getLogger(__name__)


def mean_normalize(load: np.ndarray) -> np.ndarray:
    load = np.asarray(load, dtype=float)
    m = load.mean()
    if not m > 0:
        raise ValueError("cannot mean-normalize a load vector whose mean is not positive")
    return load / m


@dataclass(frozen=True, eq=False)
class CanonicalPattern:
    label: ApplicationClass
    shape: np.ndarray
    support: int
    stale: bool = False

    def __post_init__(self):
        shape = np.asarray(self.shape, dtype=float)
        if self.support < 1:
            raise ValueError("support must be >= 1")
        if abs(shape.mean() - 1.0) > 1e-9:
            raise ValueError(f"pattern for {self.label.value} does not have mean 1")
        shape.setflags(write=False)
        object.__setattr__(self, "shape", shape)

    def __eq__(self, other):
        if not isinstance(other, CanonicalPattern):
            return NotImplemented
        return (self.label, self.support, self.stale) == (other.label, other.support, other.stale) \
            and np.array_equal(self.shape, other.shape)


def build_pattern(label: ApplicationClass, traces: Iterable[DiskTrace | np.ndarray],
                  K: int) -> CanonicalPattern:
    """Sample mean of the mean-normalized slot curves of all traces with positive mean."""
    check_slots(K)
    curves = []
    for tr in traces:
        slots = aggregate_to_slots(tr, K)
        if slots.mean() > 0:
            curves.append(mean_normalize(slots))
        else:
            log.info("skipping zero-mean trace for %s", label.value)
    if not curves:
        raise ValueError(f"no trace with positive mean for {label.value}")
    # sort rows so the floating-point sum does not depend on input order
    stack = np.array(sorted(map(tuple, curves)))
    shape = stack.mean(axis=0)
    return CanonicalPattern(label, shape / shape.mean(), len(curves))


def synthesize_profile(intensity: float, pattern: CanonicalPattern | np.ndarray) -> np.ndarray:
    if intensity < 0:
        raise ValueError("intensity must be >= 0")
    shape = pattern.shape if isinstance(pattern, CanonicalPattern) else np.asarray(pattern)
    return intensity * shape


@dataclass(frozen=True)
class ProfileLibrary:
    patterns: Mapping[ApplicationClass, CanonicalPattern]
    K: int
    built_at: float = 0.0
    window: tuple[int, int] = (0, 0)  # trace-day range used

    def __post_init__(self):
        if ApplicationClass.UNKNOWN in self.patterns:
            raise ValueError("the library never holds a pattern for Unknown")
        for p in self.patterns.values():
            if len(p.shape) != self.K:
                raise ValueError("pattern width does not match K")
        object.__setattr__(self, "patterns", dict(self.patterns))

    def get(self, label: ApplicationClass) -> CanonicalPattern | None:
        return self.patterns.get(label)

    def __contains__(self, label):
        return label in self.patterns

    def __len__(self):
        return len(self.patterns)

    @property
    def stale_labels(self) -> set[ApplicationClass]:
        return {c for c, p in self.patterns.items() if p.stale}

    @classmethod
    def build(cls, traces_by_class: Mapping[ApplicationClass, list], K: int,
              built_at: float = 0.0, window: tuple[int, int] = (0, 0)) -> "ProfileLibrary":
        pats = {}
        for label, traces in traces_by_class.items():
            if not label.is_semantic:
                continue
            try:
                pats[label] = build_pattern(label, traces, K)
            except ValueError:
                log.warning("no usable traces for %s; omitted from library", label.value)
        return cls(pats, K, built_at, window)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", *[f"slot_{k}" for k in range(self.K)], "support"])
        for label in ApplicationClass:
            p = self.patterns.get(label)
            if p is not None:
                w.writerow([label.value, *[repr(float(x)) for x in p.shape], p.support])
        return buf.getvalue()

    def save(self, path: str | os.PathLike):
        Path(path).write_text(self.to_csv())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ProfileLibrary":
        rows = list(csv.reader(Path(path).read_text().splitlines()))
        if not rows or rows[0][0] != "label" or rows[0][-1] != "support":
            raise ConfigError(f"{path}: not a profiles file")
        K = len(rows[0]) - 2
        pats = {}
        for row in rows[1:]:
            label = ApplicationClass.from_label(row[0])
            shape = np.array([float(x) for x in row[1:-1]])
            pats[label] = CanonicalPattern(label, shape, int(row[-1]))
        return cls(pats, K)


def refresh(library: ProfileLibrary, recent_traces_by_class: Mapping[ApplicationClass, list],
            K: int | None = None, built_at: float = 0.0,
            window: tuple[int, int] = (0, 0)) -> ProfileLibrary:
    """Rebuild every class present in the recent window; keep and flag the rest as stale."""
    K = library.K if K is None else K
    fresh = ProfileLibrary.build(recent_traces_by_class, K, built_at, window).patterns
    pats = {}
    for label in ApplicationClass:
        if label in fresh:
            pats[label] = fresh[label]
        elif label in library.patterns:
            old = library.patterns[label]
            if len(old.shape) != K:
                log.warning("dropping %s: stale pattern has width %d, not %d",
                            label.value, len(old.shape), K)
                continue
            pats[label] = CanonicalPattern(label, old.shape, old.support, stale=True)
    return ProfileLibrary(pats, K, built_at, window)
