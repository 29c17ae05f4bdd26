"""Online semantic inference over provisioning metadata.

Three stages run in order for every request: a regex pre-filter that rejects
obviously meaningless identifiers, a prefix-aware LRU cache keyed on
(project, vm) with longest-common-prefix matching on the disk name, and a
pluggable classifier returning ``(label, confidence)``.
"""

from __future__ import annotations

import enum
import json
import logging
import os
import re
import subprocess
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .workload import TAXONOMY_ORDER, ApplicationClass, ConfigError

log = logging.getLogger(__name__)

C = ApplicationClass

DEFAULT_LEXICON: dict[ApplicationClass, dict[str, float]] = {
    C.INFRA_NODE: {"node": 2, "k8s": 3, "kube": 3, "kubernetes": 3, "worker": 2, "host": 2, "tke": 3},
    C.DATABASE: {
        "mysql": 3, "postgres": 3, "postgresql": 3, "pg": 2, "db": 3, "mongo": 3,
        "mongodb": 3, "oracle": 2, "sqlserver": 3, "mariadb": 3, "database": 3, "tidb": 3,
    },
    C.GAMING: {
        "game": 3, "gaming": 3, "realm": 3, "battle": 3, "guild": 3, "lobby": 2,
        "arena": 3, "mmo": 3, "raid": 2, "quest": 3, "dungeon": 3,
    },
    C.INFRA_MESSAGE_QUEUE: {
        "kafka": 3, "rabbitmq": 3, "mq": 3, "pulsar": 3, "broker": 2, "queue": 3, "rocketmq": 3,
    },
    C.DEV_TEST_ENV: {"dev": 3, "test": 3, "staging": 3, "qa": 3, "sandbox": 3, "ci": 2, "uat": 3},
    C.MEDIA_STREAMING: {
        "video": 3, "stream": 3, "streaming": 3, "live": 2, "vod": 3, "transcode": 3,
        "cdn": 2, "media": 1,
    },
    C.COMPUTE_SIMULATION: {
        "hpc": 3, "sim": 3, "simulation": 3, "render": 3, "compute": 2, "batch": 2, "solver": 3,
    },
    C.INFRA_LOGGING: {
        "log": 3, "logs": 3, "logging": 3, "elk": 3, "prometheus": 3, "grafana": 3,
        "monitor": 3, "monitoring": 3, "metrics": 3, "elasticsearch": 3,
    },
    C.DATA_COLLECTION: {
        "crawler": 3, "spider": 3, "collect": 3, "collector": 3, "scrape": 3, "ingest": 2, "etl": 3,
    },
    C.OFFICE_SYSTEM: {
        "oa": 3, "office": 3, "erp": 3, "crm": 3, "hr": 3, "mail": 3, "attendance": 3, "wiki": 2,
    },
    C.GENERIC_AUTOSCALING: {"asg": 3, "autoscale": 3, "autoscaling": 3, "scaling": 2},
    C.INFRA_COORDINATION: {"zookeeper": 3, "zk": 3, "etcd": 3, "consul": 3, "coordinator": 2},
    C.AI_ML: {
        "ml": 3, "ai": 3, "gpu": 2, "train": 3, "training": 3, "inference": 3, "model": 2, "llm": 3,
    },
    C.IOT_SAAS: {"iot": 3, "device": 2, "sensor": 3, "saas": 3, "telemetry": 2},
    C.CORP_WEBSITE: {"www": 3, "website": 3, "site": 2, "portal": 2, "homepage": 3, "cms": 3},
    C.EDUCATION: {
        "edu": 3, "school": 3, "course": 3, "student": 3, "campus": 3, "learn": 3, "exam": 3,
    },
    C.FINANCE_PAYMENT: {
        "pay": 3, "payment": 3, "finance": 3, "bank": 3, "billing": 3, "trade": 3, "wallet": 3,
    },
    C.INFRA_JUMPBOX: {"jump": 3, "jumpbox": 3, "bastion": 3, "jumpserver": 3, "ssh": 2},
    C.MEDIA_NEWS: {"news": 3, "article": 3, "press": 2, "feed": 2, "headline": 3},
    C.INFRA_CACHE: {"redis": 3, "memcached": 3, "cache": 3, "memcache": 3},
    C.ECOMMERCE_RETAIL: {
        "shop": 3, "mall": 3, "store": 2, "retail": 3, "cart": 3, "order": 2, "ecommerce": 3,
    },
    C.COMMUNITY: {"forum": 3, "bbs": 3, "community": 3, "social": 3, "chat": 2},
    C.TRAVEL: {"travel": 3, "hotel": 3, "flight": 3, "trip": 3, "booking": 2},
    C.GOV_PUBLIC_SERVICE: {"gov": 3, "govt": 3, "public": 2, "citizen": 3},
    C.LOGISTICS_MOBILITY: {
        "logistics": 3, "fleet": 3, "ride": 3, "mobility": 3, "transport": 3, "gps": 2,
    },
    C.DELIVERY: {"delivery": 3, "courier": 3, "takeout": 3, "dispatch": 2},
    C.INFRA_CLOUD_FUNCTION: {"faas": 3, "lambda": 3, "function": 2, "serverless": 3, "scf": 3},
}

# keywords the filter must never reject (database/cache/messaging/orchestration/monitoring)
PRESERVED_CLASSES = (
    C.DATABASE, C.INFRA_CACHE, C.INFRA_MESSAGE_QUEUE, C.INFRA_COORDINATION, C.INFRA_LOGGING,
)
EXTRA_PRESERVED = ("k8s", "kube", "kubernetes", "docker", "container", "nginx", "es")

BOILERPLATE_TOKENS = frozenset(
    "unnamed default disk vm cvm instance ins volume vol new noname untitled none null "
    "system sys root data tmp temp my".split()
)

_SEP_RE = re.compile(r"[-_./\s]+")
_CAMEL_RE = re.compile(r"(?<=[a-z])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")
_ALNUM_BOUNDARY_RE = re.compile(r"(?<=[A-Za-z])(?=\d)|(?<=\d)(?=[A-Za-z])")
_UUID_RE = re.compile(
    r"[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}", re.IGNORECASE
)
_HEX_RUN_RE = re.compile(r"[0-9a-f]{16,}", re.IGNORECASE)
_CONSONANT_RUN_RE = re.compile(r"[bcdfghjklmnpqrstvwxz]{5,}", re.IGNORECASE)
_HEX_WORD_RE = re.compile(r"^(?=.*\d)(?=.*[a-f])[0-9a-f]{8,}$", re.IGNORECASE)


def tokenize(text: str) -> list[str]:
    """Split on ``-_./`` and whitespace, camelCase and letter/digit boundaries; lowercase."""
    out = []
    for part in _SEP_RE.split(text):
        if not part:
            continue
        for sub in _CAMEL_RE.split(part):
            out.extend(t.lower() for t in _ALNUM_BOUNDARY_RE.split(sub) if t)
    return out


def _strip_identifiers(text: str) -> str:
    """Drop UUIDs, long hex runs and hex words so they cannot supply keywords."""
    text = _HEX_RUN_RE.sub(" ", _UUID_RE.sub(" ", text))
    return " ".join(p for p in _SEP_RE.split(text) if not _HEX_WORD_RE.match(p))


def _alternations(token: str) -> int:
    kinds = [ch.isdigit() for ch in token if ch.isalnum()]
    return sum(a != b for a, b in zip(kinds, kinds[1:]))


@dataclass
class Lexicon:
    """Weighted keyword lists per semantic class."""

    weights: dict[ApplicationClass, dict[str, float]]
    _index: dict[str, list[tuple[ApplicationClass, float]]] = field(init=False, repr=False)

    def __post_init__(self):
        if ApplicationClass.UNKNOWN in self.weights and self.weights[ApplicationClass.UNKNOWN]:
            raise ConfigError("Unknown must not carry lexicon tokens")
        self._index = {}
        for cls, toks in self.weights.items():
            for tok, w in toks.items():
                if w <= 0:
                    raise ConfigError(f"non-positive weight for {tok!r}")
                self._index.setdefault(tok.lower(), []).append((cls, float(w)))

    @classmethod
    def default(cls) -> "Lexicon":
        return cls({c: dict(t) for c, t in DEFAULT_LEXICON.items()})

    def validate_complete(self):
        missing = [c.value for c in ApplicationClass if c.is_semantic and not self.weights.get(c)]
        if missing:
            raise ConfigError(f"lexicon has no tokens for: {', '.join(missing)}")

    def matches(self, token: str) -> list[tuple[ApplicationClass, float]]:
        return self._index.get(token, [])

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def to_json(self) -> str:
        return json.dumps(
            {c.value: self.weights[c] for c in ApplicationClass if c in self.weights},
            indent=1,
        )

    @classmethod
    def load(cls, path: str | os.PathLike) -> "Lexicon":
        raw = json.loads(Path(path).read_text())
        return cls({ApplicationClass.from_label(k): dict(v) for k, v in raw.items()})


class Source(enum.Enum):
    CACHE_HIT = "cache_hit"
    CLASSIFIER = "classifier"
    FILTERED = "filtered"


@dataclass(frozen=True)
class SemanticResult:
    label: ApplicationClass
    confidence: float
    source: Source

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.source is Source.FILTERED and (
            self.label is not ApplicationClass.UNKNOWN or self.confidence != 0
        ):
            raise ValueError("filtered results must be (Unknown, 0)")


FILTERED_RESULT = SemanticResult(ApplicationClass.UNKNOWN, 0.0, Source.FILTERED)


# --------------------------------------------------------------------------- filter


@dataclass
class NoiseFilter:
    """Conservative regex filter for low-information metadata."""

    lexicon: Lexicon = field(default_factory=Lexicon.default)
    extra_deny: list[re.Pattern] = field(default_factory=list)
    extra_allow: list[re.Pattern] = field(default_factory=list)
    min_token_len: int = 12
    min_alternations: int = 4

    def __post_init__(self):
        preserved = set(EXTRA_PRESERVED)
        for cls in PRESERVED_CLASSES:
            preserved.update(self.lexicon.weights.get(cls, {}))
        self._preserved_short = {k for k in preserved if len(k) < 4}
        self._preserved_long = sorted(k for k in preserved if len(k) >= 4)

    def load_overrides(self, path: str | os.PathLike):
        """Read ``deny: <regex>`` / ``allow: <regex>`` lines; ``#`` starts a comment."""
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            kind, _, pat = line.partition(":")
            kind, pat = kind.strip().lower(), pat.strip()
            if kind not in ("deny", "allow") or not pat:
                raise ConfigError(f"{path}:{lineno}: expected 'deny: <regex>' or 'allow: <regex>'")
            (self.extra_deny if kind == "deny" else self.extra_allow).append(re.compile(pat))

    def _preserved(self, tokens: list[str], joined: str) -> bool:
        if any(t in self._preserved_short for t in tokens):
            return True
        return any(k in joined for k in self._preserved_long)

    def __call__(self, project: str, vm: str, disk: str) -> bool:
        """True when the metadata carries no recoverable semantics."""
        fields = (project, vm, disk)
        raw = " ".join(fields)
        if any(p.search(raw) for p in self.extra_allow):
            return False
        stripped = [_strip_identifiers(f) for f in fields]
        sem_tokens = [t for f in stripped for t in tokenize(f)]
        if self._preserved(sem_tokens, " ".join(stripped).lower()):
            return False
        if any(p.search(raw) for p in self.extra_deny):
            return True

        for f in fields:
            if _UUID_RE.search(f) or _HEX_RUN_RE.search(_SEP_RE.sub("", f)):
                return True
        for f in fields:
            for tok in _SEP_RE.split(f):
                if (
                    len(tok) >= self.min_token_len
                    and any(ch.isdigit() for ch in tok)
                    and _alternations(tok) >= self.min_alternations
                ):
                    return True
                for sub in tokenize(tok):
                    if _CONSONANT_RUN_RE.search(sub) and sub not in self.lexicon:
                        return True
        meaningful = [t for t in sem_tokens if not t.isdigit() and t not in BOILERPLATE_TOKENS]
        return not meaningful


def regex_filter(metadata: tuple[str, str, str], nf: NoiseFilter | None = None) -> bool:
    return (nf or _default_filter())(*metadata)


_DEFAULT_FILTER: NoiseFilter | None = None


def _default_filter() -> NoiseFilter:
    global _DEFAULT_FILTER
    if _DEFAULT_FILTER is None:
        _DEFAULT_FILTER = NoiseFilter()
    return _DEFAULT_FILTER


# --------------------------------------------------------------------------- cache


def lcp_ratio(d_new: str, d_cached: str) -> float:
    if not d_new:
        raise ValueError("d_new must be non-empty")
    return len(os.path.commonprefix([d_new, d_cached])) / len(d_new)


class PrefixCache:
    """LRU cache of classifier results, matched on (project, vm) and disk-name prefix."""

    def __init__(self, capacity: int = 10_000, lcp_threshold: float = 0.4):
        if capacity < 1:
            raise ConfigError("cache capacity must be >= 1")
        self.capacity = capacity
        self.lcp_threshold = lcp_threshold
        self._lru: OrderedDict[tuple[str, str, str], SemanticResult] = OrderedDict()
        self._groups: dict[tuple[str, str], dict[str, int]] = {}
        self._clock = 0

    def __len__(self):
        return len(self._lru)

    def _touch(self, key):
        self._clock += 1
        self._lru.move_to_end(key)
        self._groups[key[:2]][key[2]] = self._clock

    def lookup(self, project: str, vm: str, disk: str) -> SemanticResult | None:
        group = self._groups.get((project, vm))
        if not group or not disk:
            return None
        best, best_rec = None, -1
        for name, rec in group.items():
            if rec > best_rec and lcp_ratio(disk, name) >= self.lcp_threshold:
                best, best_rec = name, rec
        if best is None:
            return None
        key = (project, vm, best)
        self._touch(key)
        return self._lru[key]

    def insert(self, project: str, vm: str, disk: str, result: SemanticResult):
        if result.source is not Source.CLASSIFIER:
            raise ValueError("only classifier results are cached")
        key = (project, vm, disk)
        self._lru[key] = result
        self._groups.setdefault((project, vm), {})
        self._touch(key)
        while len(self._lru) > self.capacity:
            (p, v, d), _ = self._lru.popitem(last=False)
            g = self._groups[(p, v)]
            del g[d]
            if not g:
                del self._groups[(p, v)]

    def entries(self) -> list[tuple[tuple[str, str, str], SemanticResult]]:
        """Entries from least to most recently used."""
        return list(self._lru.items())


# --------------------------------------------------------------------------- classifiers


class Classifier(Protocol):
    def __call__(self, project: str, vm: str, disk: str) -> tuple[ApplicationClass, float]: ...


class LexiconClassifier:
    """Keyword scorer: label = argmax summed weight, confidence = top/(top+second+1)."""

    def __init__(self, lexicon: Lexicon | None = None):
        self.lexicon = lexicon or Lexicon.default()

    def scores(self, project: str, vm: str, disk: str) -> dict[ApplicationClass, float]:
        s: dict[ApplicationClass, float] = {}
        for f in (project, vm, disk):
            for tok in tokenize(f):
                for cls, w in self.lexicon.matches(tok):
                    s[cls] = s.get(cls, 0.0) + w
        return s

    def __call__(self, project: str, vm: str, disk: str) -> tuple[ApplicationClass, float]:
        s = self.scores(project, vm, disk)
        if not s:
            return ApplicationClass.UNKNOWN, 0.0
        ranked = sorted(s.items(), key=lambda kv: (-kv[1], TAXONOMY_ORDER[kv[0]]))
        top = ranked[0][1]
        second = ranked[1][1] if len(ranked) > 1 else 0.0
        return ranked[0][0], top / (top + second + 1.0)


class SubprocessClassifier:
    """Adapter for an external classifier process.

    The child reads one ``project<TAB>vm<TAB>disk`` line per request on stdin
    and answers with one ``label<TAB>confidence`` line on stdout.
    """

    def __init__(self, argv: list[str]):
        self.argv = list(argv)
        self._proc = subprocess.Popen(
            self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1
        )

    def __call__(self, project: str, vm: str, disk: str) -> tuple[ApplicationClass, float]:
        for f in (project, vm, disk):
            if "\t" in f or "\n" in f:
                raise ValueError("metadata fields must not contain tabs or newlines")
        assert self._proc.stdin and self._proc.stdout
        self._proc.stdin.write(f"{project}\t{vm}\t{disk}\n")
        self._proc.stdin.flush()
        line = self._proc.stdout.readline()
        if not line:
            raise RuntimeError(f"classifier process {self.argv!r} closed its output")
        label, _, conf = line.rstrip("\n").partition("\t")
        q = min(1.0, max(0.0, float(conf)))
        return ApplicationClass.from_label(label), q

    def close(self):
        if self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=5)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# --------------------------------------------------------------------------- pipeline


@dataclass
class PipelineStats:
    requests: int = 0
    filtered: int = 0
    cache_hits: int = 0
    classifier_calls: int = 0


class SemanticPipeline:
    """filter -> cache -> classifier -> cache insert."""

    def __init__(
        self,
        classifier: Classifier | None = None,
        noise_filter: NoiseFilter | None = None,
        cache: PrefixCache | None = None,
        use_filter: bool = True,
        use_cache: bool = True,
    ):
        self.classifier = classifier or LexiconClassifier()
        self.noise_filter = noise_filter or NoiseFilter(
            getattr(self.classifier, "lexicon", None) or Lexicon.default()
        )
        self.cache = cache if cache is not None else PrefixCache()
        self.use_filter = use_filter
        self.use_cache = use_cache
        self.stats = PipelineStats()

    def infer(self, project: str, vm: str, disk: str) -> SemanticResult:
        self.stats.requests += 1
        if self.use_filter and self.noise_filter(project, vm, disk):
            self.stats.filtered += 1
            return FILTERED_RESULT
        if self.use_cache:
            hit = self.cache.lookup(project, vm, disk)
            if hit is not None:
                self.stats.cache_hits += 1
                return SemanticResult(hit.label, hit.confidence, Source.CACHE_HIT)
        label, q = self.classifier(project, vm, disk)
        self.stats.classifier_calls += 1
        result = SemanticResult(label, float(q), Source.CLASSIFIER)
        if self.use_cache and disk:
            self.cache.insert(project, vm, disk, result)
        return result
