"""Seeded synthetic corpora: provisioning requests, disk traces and ground truth.

Every disk belongs to a class with a mean-1 daily shape.  A disk's own shape
is the class shape plus zero-mean noise (clamped and renormalised), scaled by
a lognormal intensity and expanded to 5-minute samples.
"""

from __future__ import annotations

import math
import string
from dataclasses import asdict, dataclass, field

import numpy as np

from .workload import (
    DAY_S,
    SAMPLES_PER_DAY,
    ApplicationClass,
    ConfigError,
    DiskRole,
    DiskTrace,
    MediaType,
    ProvisioningRequest,
    ResourceSpec,
)

GEN_SLOTS = 24  # hourly resolution of template shapes

C = ApplicationClass


@dataclass(frozen=True)
class ClassTemplate:
    label: ApplicationClass
    base_shape: np.ndarray
    peak_window: int
    intensity_log_mean: float
    intensity_log_sigma: float
    burstiness: float
    project_templates: tuple[str, ...]
    vm_templates: tuple[str, ...]
    disk_templates: tuple[str, ...]
    ssd_prob: float = 0.5
    lease_choices: tuple[int, ...] = (30, 90, 365, 730)

    def __post_init__(self):
        shape = np.asarray(self.base_shape, dtype=float)
        if abs(shape.mean() - 1.0) > 1e-9 or np.any(shape < 0):
            raise ConfigError(f"{self.label.value}: base_shape must be non-negative with mean 1")
        if self.burstiness < 1:
            raise ConfigError("burstiness must be >= 1")
        if not 0 <= self.peak_window < 4:
            raise ConfigError("peak_window must be in [0, 4)")
        object.__setattr__(self, "base_shape", shape)

    @property
    def name_templates(self) -> tuple[str, ...]:
        return self.disk_templates


def diurnal_shape(peak_hour: float, burstiness: float, slots: int = GEN_SLOTS,
                  kappa: float = 2.0) -> np.ndarray:
    """Mean-1 daily curve with a single von Mises bump; max/mean equals ``burstiness``."""
    h = (np.arange(slots) + 0.5) * 24.0 / slots
    bump = np.exp(kappa * np.cos(2 * np.pi * (h - peak_hour) / 24.0))
    bump /= bump.mean()
    alpha = (burstiness - 1.0) / (bump.max() - 1.0)
    if not 0 <= alpha <= 1:
        raise ConfigError(f"burstiness {burstiness} not reachable with kappa={kappa}")
    shape = (1.0 - alpha) + alpha * bump
    return shape / shape.mean()


def _tpl(label, window, peak_hour, burst, log_mean, projects, vms, disks, **kw):
    return ClassTemplate(
        label=label,
        base_shape=diurnal_shape(peak_hour, burst),
        peak_window=window,
        intensity_log_mean=log_mean,
        intensity_log_sigma=kw.pop("sigma", 0.9),
        burstiness=burst,
        project_templates=tuple(projects),
        vm_templates=tuple(vms),
        disk_templates=tuple(disks),
        **kw,
    )


def default_templates() -> list[ClassTemplate]:
    """Eight classes whose peaks cover all four six-hour windows."""
    return [
        _tpl(C.DATABASE, 1, 10.0, 1.3, math.log(420),
             ["{word}-db", "{word}-mysql", "{word}-core"],
             ["mysql-{env}-{n}", "db-master-{n}", "pg-{word}-{n}"],
             ["mysql-{env}-{n}", "db-data-{n}", "{word}-db-{n}"],
             ssd_prob=0.8, lease_choices=(365, 730)),
        _tpl(C.GAMING, 3, 21.5, 2.8, math.log(320),
             ["{word}-game", "{word}-realm"],
             ["realm-srv-{n}", "battle-{word}-{n}", "game-server-{n}"],
             ["{word}-realm-node-{n}", "guild-data-{n}", "arena-{word}-{n}"],
             ssd_prob=0.9, lease_choices=(30, 90)),
        _tpl(C.OFFICE_SYSTEM, 1, 10.5, 2.6, math.log(220),
             ["{word}-oa", "{word}-office"],
             ["oa-{env}-{n}", "erp-app-{n}", "crm-{word}-{n}"],
             ["oa-data-{n}", "erp-{word}-{n}", "mail-data-{n}"],
             ssd_prob=0.3, lease_choices=(365, 730)),
        _tpl(C.MEDIA_STREAMING, 2, 15.5, 2.2, math.log(380),
             ["{word}-video", "{word}-stream"],
             ["vod-{env}-{n}", "transcode-{n}", "video-{word}-{n}"],
             ["video-data-{n}", "stream-{word}-{n}", "vod-data-{n}"],
             ssd_prob=0.6, lease_choices=(90, 365)),
        _tpl(C.COMPUTE_SIMULATION, 0, 3.0, 2.5, math.log(360),
             ["{word}-hpc", "{word}-sim"],
             ["hpc-{word}-{n}", "render-{n}", "solver-{env}-{n}"],
             ["sim-scratch-{n}", "render-{word}-{n}", "hpc-data-{n}"],
             ssd_prob=0.2, lease_choices=(7, 30)),
        _tpl(C.DEV_TEST_ENV, 2, 14.5, 1.8, math.log(180),
             ["{word}-dev", "{word}-staging"],
             ["dev-{word}-{n}", "test-runner-{n}", "staging-{n}"],
             ["dev-data-{n}", "test-{word}-{n}", "qa-{word}-{n}"],
             ssd_prob=0.4, lease_choices=(7, 30, 90)),
        _tpl(C.INFRA_MESSAGE_QUEUE, 0, 4.0, 1.6, math.log(300),
             ["{word}-mq", "{word}-kafka"],
             ["kafka-broker-{n}", "mq-{env}-{n}", "pulsar-{word}-{n}"],
             ["kafka-part-{n}", "queue-{word}-{n}", "mq-data-{n}"],
             ssd_prob=0.7, lease_choices=(365, 730)),
        _tpl(C.ECOMMERCE_RETAIL, 3, 20.5, 2.0, math.log(260),
             ["{word}-shop", "{word}-mall"],
             ["shop-web-{n}", "cart-{env}-{n}", "mall-{word}-{n}"],
             ["shop-data-{n}", "order-{word}-{n}", "cart-store-{n}"],
             ssd_prob=0.6, lease_choices=(90, 365)),
    ]


DEFAULT_CLASS_MIX = {
    C.DATABASE: 0.16,
    C.GAMING: 0.14,
    C.OFFICE_SYSTEM: 0.11,
    C.MEDIA_STREAMING: 0.14,
    C.COMPUTE_SIMULATION: 0.12,
    C.DEV_TEST_ENV: 0.10,
    C.INFRA_MESSAGE_QUEUE: 0.12,
    C.ECOMMERCE_RETAIL: 0.11,
}

WORDS = (
    "atlas orion nova lotus falcon panda tiger ocean silver golden maple cedar river "
    "summit aurora comet delta echo harbor island jade lunar meadow nimbus olive "
    "pearl quartz ruby sierra topaz violet willow zenith amber coral"
).split()
ENVS = ("prod", "online", "main", "core", "east", "blue")


@dataclass
class GeneratorConfig:
    n_disks: int = 5000
    class_mix: dict = field(default_factory=lambda: dict(DEFAULT_CLASS_MIX))
    unknown_fraction: float = 0.20
    noise_sigma: float = 0.25
    arrival_horizon_s: float = float(DAY_S)
    seed: int = 0
    days: int = 7
    jitter_sigma: float = 0.25
    day_sigma: float = 0.08
    batch_fraction: float = 0.30
    batch_size_range: tuple[int, int] = (2, 8)

    def __post_init__(self):
        self.class_mix = {
            (k if isinstance(k, ApplicationClass) else ApplicationClass.from_label(k)): float(v)
            for k, v in self.class_mix.items()
        }
        if self.n_disks < 1:
            raise ConfigError("n_disks must be >= 1")
        if abs(sum(self.class_mix.values()) - 1.0) > 1e-9 or min(self.class_mix.values()) < 0:
            raise ConfigError("class_mix must be a probability vector")
        if ApplicationClass.UNKNOWN in self.class_mix:
            raise ConfigError("class_mix ranges over semantic classes only")
        if not 0 <= self.unknown_fraction <= 1:
            raise ConfigError("unknown_fraction must lie in [0, 1]")
        if not 0 <= self.batch_fraction <= 1:
            raise ConfigError("batch_fraction must lie in [0, 1]")
        if self.days < 1 or self.arrival_horizon_s <= 0 or self.noise_sigma < 0:
            raise ConfigError("days, arrival_horizon_s must be positive; noise_sigma >= 0")
        self.batch_size_range = tuple(int(x) for x in self.batch_size_range)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["class_mix"] = {k.value: v for k, v in self.class_mix.items()}
        d["batch_size_range"] = list(self.batch_size_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        known = cls.__dataclass_fields__
        bad = set(d) - set(known)
        if bad:
            raise ConfigError(f"unknown generator config keys: {sorted(bad)}")
        return cls(**d)


@dataclass
class GroundTruth:
    labels: dict[int, ApplicationClass]
    intensities: dict[int, float]
    profiles: dict[int, np.ndarray]  # mean-1 hourly shape actually used for the trace

    def __len__(self):
        return len(self.labels)


@dataclass
class Corpus:
    requests: list[ProvisioningRequest]
    traces: dict[int, DiskTrace]
    ground_truth: GroundTruth

    def spec_intensity_pairs(self):
        """(spec, generator intensity) per request."""
        return [(r.spec, self.ground_truth.intensities[r.request_id]) for r in self.requests]

    def observed_pairs(self):
        """(spec, mean throughput of the recorded trace) per request."""
        return [(r.spec, self.traces[r.request_id].mean) for r in self.requests]


def _hex(rng: np.random.Generator, n: int) -> str:
    return "".join("0123456789abcdef"[i] for i in rng.integers(0, 16, n))


def _uuid(rng: np.random.Generator) -> str:
    h = _hex(rng, 32)
    return f"{h[:8]}-{h[8:12]}-{h[12:16]}-{h[16:20]}-{h[20:]}"


def _render(rng: np.random.Generator, templates, n: int | None = None) -> str:
    t = templates[rng.integers(len(templates))]
    return t.format(
        word=WORDS[rng.integers(len(WORDS))],
        env=ENVS[rng.integers(len(ENVS))],
        n=f"{(rng.integers(1, 100) if n is None else n):02d}",
    )


def _spec_for(rng: np.random.Generator, tpl: ClassTemplate, intensity: float,
              role: DiskRole) -> ResourceSpec:
    u = (math.log(max(intensity, 1e-9)) - math.log(300.0)) / 0.9
    vcpus = (1, 2, 4, 8, 16, 32)
    vi = int(np.clip(round(1.8 + 1.1 * u + rng.normal(0, 0.6)), 0, len(vcpus) - 1))
    mem = vcpus[vi] * int(rng.choice((2, 4, 8)))
    if role is DiskRole.SYSTEM:
        cap = int(rng.choice((20, 50, 100)))
    else:
        caps = (50, 100, 200, 500, 1000, 2000, 4000)
        ci = int(np.clip(round(3 + 1.3 * u + rng.normal(0, 0.4)), 0, len(caps) - 1))
        cap = caps[ci]
    media = MediaType.SSD if rng.random() < tpl.ssd_prob else MediaType.HDD
    lease = int(rng.choice(tpl.lease_choices))
    return ResourceSpec(vcpus[vi], mem, cap, lease, role, media)


def _validate(config: GeneratorConfig, templates: list[ClassTemplate]) -> dict:
    by_label = {t.label: t for t in templates}
    for cls, p in config.class_mix.items():
        if p > 0 and cls not in by_label:
            raise ConfigError(f"class {cls.value} has positive mass but no template")
    return by_label


def generate_corpus(config: GeneratorConfig,
                    templates: list[ClassTemplate] | None = None) -> Corpus:
    templates = default_templates() if templates is None else templates
    by_label = _validate(config, templates)
    rng = np.random.default_rng(config.seed)
    classes = [c for c in config.class_mix if config.class_mix[c] > 0]
    probs = np.array([config.class_mix[c] for c in classes])
    probs /= probs.sum()

    # group disks into batches sharing (project, vm) and a disk-name prefix
    groups: list[int] = []
    remaining = config.n_disks
    lo, hi = config.batch_size_range
    mean_size = (lo + hi) / 2
    # probability a group is a batch, so that batch_fraction of disks sit in batches
    batch_p = config.batch_fraction / (mean_size - config.batch_fraction * (mean_size - 1))
    while remaining > 0:
        if rng.random() < batch_p and remaining >= 2:
            size = int(min(rng.integers(lo, hi + 1), remaining))
        else:
            size = 1
        groups.append(size)
        remaining -= size

    n = config.n_disks
    arrivals = np.sort(rng.uniform(0.0, config.arrival_horizon_s, n))
    order = rng.permutation(n)  # decouples batch membership from arrival rank
    samples_len = SAMPLES_PER_DAY * config.days
    per_hour = SAMPLES_PER_DAY // GEN_SLOTS

    rows = []  # (slot in arrival order, meta, label, intensity, profile, spec, samples)
    disk_idx = 0
    for size in groups:
        cls = classes[rng.choice(len(classes), p=probs)]
        tpl = by_label[cls]
        unknown = rng.random() < config.unknown_fraction
        project = _render(rng, tpl.project_templates)
        vm = _render(rng, tpl.vm_templates)
        base_disk = _render(rng, tpl.disk_templates, n=0)[:-2]
        if unknown:
            project, vm = _hex(rng, 16), "ins-" + _hex(rng, 8)
        first = int(rng.integers(1, 90))
        for j in range(size):
            if unknown:
                disk = _uuid(rng)
            elif size > 1:
                disk = f"{base_disk}{first + j:02d}"
            else:
                disk = _render(rng, tpl.disk_templates)
            role = DiskRole.SYSTEM if rng.random() < 0.2 else DiskRole.DATA
            intensity = float(rng.lognormal(tpl.intensity_log_mean, tpl.intensity_log_sigma))
            if role is DiskRole.SYSTEM:
                intensity *= 0.35
            spec = _spec_for(rng, tpl, intensity, role)
            shape = tpl.base_shape + rng.normal(0.0, config.noise_sigma, GEN_SLOTS)
            shape = np.clip(shape, 0.0, None)
            if shape.sum() <= 0:
                shape = tpl.base_shape.copy()
            shape = shape / shape.mean()
            expanded = np.tile(np.repeat(shape, per_hour), config.days)
            jitter = rng.lognormal(-0.5 * config.jitter_sigma**2, config.jitter_sigma, samples_len) \
                if config.jitter_sigma > 0 else np.ones(samples_len)
            day = rng.lognormal(-0.5 * config.day_sigma**2, config.day_sigma, config.days) \
                if config.day_sigma > 0 else np.ones(config.days)
            samples = intensity * expanded * jitter * np.repeat(day, SAMPLES_PER_DAY)
            rows.append((int(order[disk_idx]), (project, vm, disk), cls, intensity, shape,
                         spec, samples))
            disk_idx += 1

    rows.sort(key=lambda r: r[0])
    requests, traces = [], {}
    labels, intens, profiles = {}, {}, {}
    for rid, (slot, (p, v, d), cls, inten, shape, spec, samples) in enumerate(rows):
        requests.append(ProvisioningRequest(rid, float(arrivals[slot]), p, v, d, spec))
        traces[rid] = DiskTrace(rid, samples)
        labels[rid], intens[rid], profiles[rid] = cls, inten, shape
    return Corpus(requests, traces, GroundTruth(labels, intens, profiles))


_NOISE_ALPHABET = np.array(list(string.ascii_lowercase + string.digits))


def _random_string(rng: np.random.Generator) -> str:
    return "".join(_NOISE_ALPHABET[rng.integers(0, len(_NOISE_ALPHABET), rng.integers(12, 33))])


def inject_noise(requests: list[ProvisioningRequest], ratio: float,
                 seed: int = 0) -> list[ProvisioningRequest]:
    """Replace the metadata of exactly ``round(ratio * n)`` requests with random strings."""
    if not 0 <= ratio <= 1:
        raise ConfigError("noise ratio must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    n = len(requests)
    chosen = set(rng.choice(n, size=int(round(ratio * n)), replace=False).tolist())
    out = []
    for i, r in enumerate(requests):
        if i in chosen:
            r = r.with_metadata(_random_string(rng), _random_string(rng), _random_string(rng))
        out.append(r)
    return out


def noisy_ids(original: list[ProvisioningRequest], noisy: list[ProvisioningRequest]) -> set[int]:
    return {a.request_id for a, b in zip(original, noisy) if a.metadata != b.metadata}
