import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from phaseplace.generator import inject_noise
from phaseplace.semantics import (
    FILTERED_RESULT,
    Lexicon,
    LexiconClassifier,
    NoiseFilter,
    PrefixCache,
    SemanticPipeline,
    SemanticResult,
    Source,
    SubprocessClassifier,
    lcp_ratio,
    regex_filter,
    tokenize,
)
from phaseplace.workload import TAXONOMY_ORDER, ApplicationClass, ConfigError

C = ApplicationClass
DB = SemanticResult(C.DATABASE, 0.75, Source.CLASSIFIER)


# ---- filter


@pytest.mark.parametrize("meta,expected", [
    (("proj", "vm", "550e8400-e29b-41d4-a716-446655440000"), True),
    (("shop", "backend", "mysql-prod-01"), False),
    (("p", "v", "xkqzjwtr-bfgm-node"), True),
    (("p", "v", "kafka-cache-node"), False),
    (("unnamed", "default", "disk"), True),
    (("", "", ""), True),
    (("proj", "vm", "a1b2c3d4e5f6a7b8c9"), True),
    (("game", "realm-01", "battle-data-03"), False),
])
def test_regex_filter_examples(meta, expected):
    assert regex_filter(meta) is expected


def test_filter_preserves_infrastructure_keywords_inside_noise():
    assert not regex_filter(("x9k2m4p7q1z8w3", "redis", "0000-1111"))


def test_filter_overrides(tmp_path):
    f = tmp_path / "rules.txt"
    f.write_text("# comment\ndeny: ^acme\nallow: zzzzzzz\n")
    nf = NoiseFilter()
    nf.load_overrides(f)
    assert nf("acme", "shop", "store-01")
    assert not nf("p", "v", "zzzzzzz")
    f.write_text("bogus line\n")
    with pytest.raises(ConfigError):
        NoiseFilter().load_overrides(f)


def test_filter_precision_on_clean_corpus(clean_corpus):
    nf = NoiseFilter()
    hits = sum(nf(*r.metadata) for r in clean_corpus.requests)
    assert hits / len(clean_corpus.requests) <= 0.02


def test_filter_intercepts_injected_noise(clean_corpus):
    noisy = inject_noise(clean_corpus.requests, 1.0, seed=3)
    nf = NoiseFilter()
    hits = sum(nf(*r.metadata) for r in noisy)
    assert hits / len(noisy) >= 0.90


# ---- tokenizer and lexicon


def test_tokenize():
    assert tokenize("mysqlProd-01_data.x y") == ["mysql", "prod", "01", "data", "x", "y"]
    assert tokenize("k8sNode") == ["k", "8", "s", "node"]


def test_lexicon_rejects_unknown_tokens():
    with pytest.raises(ConfigError):
        Lexicon({C.UNKNOWN: {"x": 1}})


def test_default_lexicon_complete():
    Lexicon.default().validate_complete()
    with pytest.raises(ConfigError):
        Lexicon({C.DATABASE: {"db": 1}}).validate_complete()


def test_lexicon_json_round_trip(tmp_path):
    p = tmp_path / "lex.json"
    p.write_text(Lexicon.default().to_json())
    assert Lexicon.load(p).weights == Lexicon.default().weights


# ---- LCP and cache


def test_lcp_examples():
    assert lcp_ratio("db-data-02", "db-data-01") == 0.9
    assert lcp_ratio("abc", "abc") == 1.0
    assert lcp_ratio("abc", "xyz") == 0.0
    with pytest.raises(ValueError):
        lcp_ratio("", "abc")


@given(st.text(min_size=1), st.text())
def test_lcp_bounds(a, b):
    assert 0.0 <= lcp_ratio(a, b) <= 1.0
    assert lcp_ratio(a, a) == 1.0


def test_cache_prefix_hit():
    c = PrefixCache()
    c.insert("p", "v", "db-data-01", DB)
    assert c.lookup("p", "v", "db-data-02") == DB
    assert c.lookup("q", "v", "db-data-02") is None


def test_cache_threshold_boundary():
    c = PrefixCache(lcp_threshold=0.4)
    c.insert("p", "v", "abcxxxxxxx", DB)
    assert lcp_ratio("abcyyyyyyy", "abcxxxxxxx") == pytest.approx(0.3)
    assert c.lookup("p", "v", "abcyyyyyyy") is None
    assert c.lookup("p", "v", "abcxyyyyyy") == DB


def test_cache_lru_eviction():
    c = PrefixCache(capacity=2)
    c.insert("p", "v", "a1", DB)
    c.insert("p", "v", "b1", DB)
    assert c.lookup("p", "v", "a1") is not None  # refreshes a1
    c.insert("p", "v", "c1", DB)
    keys = [k for k, _ in c.entries()]
    assert keys == [("p", "v", "a1"), ("p", "v", "c1")]


def test_cache_capacity_bound():
    c = PrefixCache(capacity=10_000)
    for i in range(10_001):
        c.insert("p", str(i), f"d{i}", DB)
    assert len(c) == 10_000
    assert c.lookup("p", "0", "d0") is None


def test_cache_returns_most_recent_match():
    c = PrefixCache()
    other = SemanticResult(C.GAMING, 0.8, Source.CLASSIFIER)
    c.insert("p", "v", "db-data-01", DB)
    c.insert("p", "v", "db-data-03", other)
    assert c.lookup("p", "v", "db-data-02") == other


def test_cache_only_stores_classifier_results():
    with pytest.raises(ValueError):
        PrefixCache().insert("p", "v", "d", FILTERED_RESULT)


# ---- classifier


def test_classify_mysql():
    assert LexiconClassifier()("", "", "mysql-prod-01") == (C.DATABASE, 0.75)


def test_classify_no_match():
    assert LexiconClassifier()("123", "456", "789") == (C.UNKNOWN, 0.0)


def test_classify_tie_uses_taxonomy_order():
    lex = Lexicon({C.GAMING: {"alpha": 2.0}, C.DATABASE: {"beta": 2.0}})
    label, q = LexiconClassifier(lex)("alpha", "beta", "x")
    first = min((C.GAMING, C.DATABASE), key=TAXONOMY_ORDER.get)
    assert label is first
    assert q == 2.0 / (2 * 2.0 + 1)


@given(st.floats(0.01, 100), st.floats(0, 100), st.floats(0.01, 50))
def test_confidence_bounds_and_monotone(top, second, bump):
    second = min(second, top)
    q = top / (top + second + 1)
    lex1 = Lexicon({C.GAMING: {"a": top}, C.DATABASE: {"b": second}} if second > 0
                   else {C.GAMING: {"a": top}})
    lex2 = Lexicon({C.GAMING: {"a": top + bump}, C.DATABASE: {"b": second}} if second > 0
                   else {C.GAMING: {"a": top + bump}})
    _, q1 = LexiconClassifier(lex1)("a", "b", "")
    _, q2 = LexiconClassifier(lex2)("a", "b", "")
    assert q1 == pytest.approx(q)
    assert 0.0 <= q1 <= 1.0 and 0.0 <= q2 <= 1.0
    assert q2 >= q1


def test_classifier_agreement_on_clean_corpus(clean_corpus):
    clf = LexiconClassifier()
    truth = clean_corpus.ground_truth.labels
    agree = sum(clf(*r.metadata)[0] is truth[r.request_id] for r in clean_corpus.requests)
    assert agree / len(clean_corpus.requests) >= 0.95


CHILD = (
    "import sys\n"
    "for line in sys.stdin:\n"
    "    p, v, d = line.rstrip('\\n').split('\\t')\n"
    "    print('Database\\t0.9' if 'db' in d else 'Unknown\\t0', flush=True)\n"
)


def test_subprocess_classifier():
    with SubprocessClassifier([sys.executable, "-c", CHILD]) as clf:
        assert clf("p", "v", "db-01") == (C.DATABASE, 0.9)
        assert clf("p", "v", "x") == (C.UNKNOWN, 0.0)
        with pytest.raises(ValueError):
            clf("p\t", "v", "x")


# ---- pipeline


class CountingClassifier:
    def __init__(self):
        self.calls = 0
        self.inner = LexiconClassifier()
        self.lexicon = self.inner.lexicon

    def __call__(self, p, v, d):
        self.calls += 1
        return self.inner(p, v, d)


def test_pipeline_filter_precedes_classifier():
    clf = CountingClassifier()
    pipe = SemanticPipeline(clf)
    assert pipe.infer("proj", "vm", "550e8400-e29b-41d4-a716-446655440000") == FILTERED_RESULT
    assert clf.calls == 0 and len(pipe.cache) == 0


def test_pipeline_cache_hit_on_repeat():
    clf = CountingClassifier()
    pipe = SemanticPipeline(clf)
    first = pipe.infer("shop", "backend", "mysql-prod-01")
    second = pipe.infer("shop", "backend", "mysql-prod-01")
    assert first.source is Source.CLASSIFIER and second.source is Source.CACHE_HIT
    assert (first.label, first.confidence) == (second.label, second.confidence)
    assert clf.calls == 1 and len(pipe.cache) == 1


def test_pipeline_determinism(small_corpus):
    def replay():
        pipe = SemanticPipeline()
        return [pipe.infer(*r.metadata) for r in small_corpus.requests]
    assert replay() == replay()


def test_cache_soundness(small_corpus):
    pipe = SemanticPipeline()
    clf = LexiconClassifier()
    for r in small_corpus.requests:
        pipe.infer(*r.metadata)
    for (p, v, d), res in pipe.cache.entries():
        assert (res.label, res.confidence) == clf(p, v, d)


def test_filtered_result_invariant():
    with pytest.raises(ValueError):
        SemanticResult(C.DATABASE, 0.0, Source.FILTERED)
    with pytest.raises(ValueError):
        SemanticResult(C.DATABASE, 1.5, Source.CLASSIFIER)
