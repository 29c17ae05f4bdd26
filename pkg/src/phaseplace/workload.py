"""Core domain types: provisioning requests, disk traces, the application
taxonomy and time/slot arithmetic."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

SAMPLE_PERIOD_S = 300
DAY_S = 86400
SAMPLES_PER_DAY = DAY_S // SAMPLE_PERIOD_S  # 288


class ConfigError(ValueError):
    """Invalid configuration (bad slot count, malformed mix, ...)."""


class ApplicationClass(enum.Enum):
    INFRA_NODE = "Infra-node"
    DATABASE = "Database"
    GAMING = "Gaming"
    INFRA_MESSAGE_QUEUE = "Infra-message-queue"
    DEV_TEST_ENV = "Dev-test-env"
    MEDIA_STREAMING = "Media/video/streaming"
    COMPUTE_SIMULATION = "Compute/simulation"
    INFRA_LOGGING = "Infra-logging/monitoring"
    DATA_COLLECTION = "Data-collection"
    OFFICE_SYSTEM = "Office-system"
    GENERIC_AUTOSCALING = "Generic-autoscaling"
    INFRA_COORDINATION = "Infra-coordination"
    AI_ML = "AI/ML"
    IOT_SAAS = "IoT-SaaS-platform"
    CORP_WEBSITE = "Corp-website"
    EDUCATION = "Education"
    FINANCE_PAYMENT = "Finance/payment"
    INFRA_JUMPBOX = "Infra-jumpbox"
    MEDIA_NEWS = "Media/news"
    INFRA_CACHE = "Infra-cache"
    ECOMMERCE_RETAIL = "Ecommerce/retail"
    COMMUNITY = "Community"
    TRAVEL = "Travel"
    GOV_PUBLIC_SERVICE = "Gov-public-service"
    LOGISTICS_MOBILITY = "Logistics/mobility"
    DELIVERY = "Delivery"
    INFRA_CLOUD_FUNCTION = "Infra-cloud-function"
    UNKNOWN = "Unknown"

    @property
    def is_semantic(self) -> bool:
        return self is not ApplicationClass.UNKNOWN

    @classmethod
    def from_label(cls, label: str) -> "ApplicationClass":
        try:
            return cls(label)
        except ValueError:
            raise ConfigError(f"unknown application label {label!r}") from None


SEMANTIC_CLASSES: tuple[ApplicationClass, ...] = tuple(
    c for c in ApplicationClass if c.is_semantic
)
# position in the taxonomy, used for deterministic tie-breaks
TAXONOMY_ORDER = {c: i for i, c in enumerate(ApplicationClass)}


class DiskRole(enum.Enum):
    SYSTEM = "system"
    DATA = "data"


class MediaType(enum.Enum):
    SSD = "ssd"
    HDD = "hdd"


@dataclass(frozen=True)
class ResourceSpec:
    vcpu_count: int
    memory_gb: int
    capacity_gb: int
    lease_days: int
    disk_role: DiskRole = DiskRole.DATA
    media_type: MediaType = MediaType.SSD

    def __post_init__(self):
        for name in ("vcpu_count", "memory_gb", "capacity_gb", "lease_days"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        object.__setattr__(self, "disk_role", DiskRole(self.disk_role))
        object.__setattr__(self, "media_type", MediaType(self.media_type))

    def to_dict(self) -> dict:
        return {
            "vcpu_count": self.vcpu_count,
            "memory_gb": self.memory_gb,
            "capacity_gb": self.capacity_gb,
            "lease_days": self.lease_days,
            "disk_role": self.disk_role.value,
            "media_type": self.media_type.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResourceSpec":
        return cls(
            vcpu_count=int(d["vcpu_count"]),
            memory_gb=int(d["memory_gb"]),
            capacity_gb=int(d["capacity_gb"]),
            lease_days=int(d["lease_days"]),
            disk_role=DiskRole(d["disk_role"]),
            media_type=MediaType(d["media_type"]),
        )


@dataclass(frozen=True)
class ProvisioningRequest:
    """One disk creation request: metadata tuple (project, vm, disk) plus spec."""

    request_id: int
    arrival_time_s: float
    project_name: str
    vm_name: str
    disk_name: str
    spec: ResourceSpec

    def __post_init__(self):
        if self.arrival_time_s < 0:
            raise ValueError("arrival_time_s must be >= 0")

    @property
    def metadata(self) -> tuple[str, str, str]:
        return (self.project_name, self.vm_name, self.disk_name)

    def with_metadata(self, project: str, vm: str, disk: str) -> "ProvisioningRequest":
        return ProvisioningRequest(
            self.request_id, self.arrival_time_s, project, vm, disk, self.spec
        )

    def to_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "arrival_time_s": self.arrival_time_s,
            "project_name": self.project_name,
            "vm_name": self.vm_name,
            "disk_name": self.disk_name,
            "spec": self.spec.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProvisioningRequest":
        return cls(
            request_id=int(d["request_id"]),
            arrival_time_s=d["arrival_time_s"],
            project_name=d["project_name"],
            vm_name=d["vm_name"],
            disk_name=d["disk_name"],
            spec=ResourceSpec.from_dict(d["spec"]),
        )


@dataclass(frozen=True, eq=False)
class DiskTrace:
    """Per-disk throughput samples (KB/s), one every 5 minutes, index 0 at midnight."""

    disk_id: int
    samples: np.ndarray
    sample_period_s: int = field(default=SAMPLE_PERIOD_S)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or len(s) < SAMPLES_PER_DAY or len(s) % SAMPLES_PER_DAY:
            raise ValueError(
                f"trace length must be a positive multiple of {SAMPLES_PER_DAY}, got {s.shape}"
            )
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise ValueError("trace samples must be finite and non-negative")
        if self.sample_period_s != SAMPLE_PERIOD_S:
            raise ValueError("only 300 s sampling is supported")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __eq__(self, other):
        if not isinstance(other, DiskTrace):
            return NotImplemented
        return self.disk_id == other.disk_id and np.array_equal(self.samples, other.samples)

    @property
    def days(self) -> int:
        return len(self.samples) // SAMPLES_PER_DAY

    @property
    def mean(self) -> float:
        return float(self.samples.mean())


def check_slots(K: int) -> int:
    if not isinstance(K, (int, np.integer)) or K < 1 or SAMPLES_PER_DAY % K:
        raise ConfigError(f"slot count K={K!r} must divide {SAMPLES_PER_DAY}")
    return int(K)


def slot_of(time_s: float, K: int) -> int:
    """Slot index in [0, K) of a time of day."""
    check_slots(K)
    if time_s < 0:
        raise ValueError("time_s must be >= 0")
    return int((time_s % DAY_S) // (DAY_S / K))


def aggregate_to_slots(trace: DiskTrace | np.ndarray, K: int) -> np.ndarray:
    """Mean throughput per time-of-day slot, averaged over every day of the trace."""
    check_slots(K)
    s = trace.samples if isinstance(trace, DiskTrace) else np.asarray(trace, dtype=float)
    per_slot = SAMPLES_PER_DAY // K
    return s.reshape(-1, K, per_slot).mean(axis=(0, 2))


def replay_sample(trace: DiskTrace, sim_time_s: float) -> float:
    if sim_time_s < 0:
        raise ValueError("sim_time_s must be >= 0")
    idx = int(sim_time_s // SAMPLE_PERIOD_S) % len(trace.samples)
    return float(trace.samples[idx])
