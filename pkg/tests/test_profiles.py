import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phaseplace.generator import GeneratorConfig, default_templates, generate_corpus
from phaseplace.profiles import (
    CanonicalPattern,
    ProfileLibrary,
    build_pattern,
    mean_normalize,
    refresh,
    synthesize_profile,
)
from phaseplace.workload import ApplicationClass, aggregate_to_slots

from conftest import day_trace

C = ApplicationClass


def test_mean_normalize_examples():
    assert np.allclose(mean_normalize([2, 4]), [2 / 3, 4 / 3])
    assert np.allclose(mean_normalize([5] * 6), 1.0)
    with pytest.raises(ValueError):
        mean_normalize([0, 0, 0])


def test_build_pattern_examples():
    one = build_pattern(C.GAMING, [day_trace([1, 3])], 2)
    assert np.allclose(one.shape, [0.5, 1.5]) and one.support == 1
    two = build_pattern(C.GAMING, [day_trace([1, 3]), day_trace([3, 1])], 2)
    assert np.allclose(two.shape, [1, 1]) and two.support == 2


def test_build_pattern_skips_zero_mean():
    p = build_pattern(C.GAMING, [day_trace([0, 0]), day_trace([1, 3])], 2)
    assert p.support == 1
    with pytest.raises(ValueError):
        build_pattern(C.GAMING, [day_trace([0, 0])], 2)


curves = st.lists(
    st.lists(st.floats(0.01, 1e4, allow_nan=False), min_size=4, max_size=4),
    min_size=1, max_size=8,
)


@given(curves, st.randoms())
def test_build_pattern_mean_one_and_permutation_invariant(rows, rnd):
    traces = [day_trace(r) for r in rows]
    p = build_pattern(C.DATABASE, traces, 4)
    assert abs(p.shape.mean() - 1) <= 1e-9
    shuffled = traces[:]
    rnd.shuffle(shuffled)
    assert np.array_equal(build_pattern(C.DATABASE, shuffled, 4).shape, p.shape)


def test_synthesize_examples():
    assert np.array_equal(synthesize_profile(0, [0.5, 1.5]), [0, 0])
    assert np.allclose(synthesize_profile(3, [0.5, 1.5]), [1.5, 4.5])
    with pytest.raises(ValueError):
        synthesize_profile(-1, [1, 1])


@given(st.floats(0, 1e5), st.lists(st.floats(0.01, 10), min_size=2, max_size=12))
def test_synthesize_mean_is_intensity(i, raw):
    shape = np.array(raw) / np.mean(raw)
    assert abs(synthesize_profile(i, shape).mean() - i) <= 1e-9 * max(1, i)


def test_pattern_rejects_non_unit_mean():
    with pytest.raises(ValueError):
        CanonicalPattern(C.GAMING, np.array([1.0, 2.0]), 1)


def test_library_excludes_unknown():
    lib = ProfileLibrary.build({C.UNKNOWN: [day_trace([1, 2])], C.GAMING: [day_trace([1, 3])]}, 2)
    assert C.UNKNOWN not in lib and C.GAMING in lib
    with pytest.raises(ValueError):
        ProfileLibrary({C.UNKNOWN: CanonicalPattern(C.UNKNOWN, np.ones(2), 1)}, 2)


def test_library_csv_round_trip(tmp_path):
    lib = ProfileLibrary.build({C.GAMING: [day_trace([1, 3, 2, 2])],
                                C.DATABASE: [day_trace([2, 2, 2, 2])]}, 4)
    lib.save(tmp_path / "p.csv")
    back = ProfileLibrary.load(tmp_path / "p.csv")
    assert back.K == 4 and back.patterns == lib.patterns


def test_refresh_examples():
    old = {C.GAMING: [day_trace([1, 3])], C.DATABASE: [day_trace([2, 2])]}
    lib = ProfileLibrary.build(old, 2)
    assert refresh(lib, old).patterns == lib.patterns
    empty = refresh(lib, {})
    assert empty.stale_labels == {C.GAMING, C.DATABASE}
    assert all(np.array_equal(empty.get(c).shape, lib.get(c).shape) for c in lib.patterns)
    shifted = {C.GAMING: [day_trace([3, 1])]}
    new = refresh(lib, shifted)
    assert np.array_equal(new.get(C.GAMING).shape, build_pattern(C.GAMING, shifted[C.GAMING], 2).shape)
    assert new.stale_labels == {C.DATABASE}


def test_aggregate_cosine_grows_with_n():
    base = {t.label: t for t in default_templates()}[C.GAMING].base_shape
    p = mean_normalize(base.reshape(12, 2).mean(axis=1))

    def cos(n, seed):
        c = generate_corpus(GeneratorConfig(n_disks=n, class_mix={C.GAMING: 1.0},
                                            unknown_fraction=0.0, seed=seed, days=1))
        total = np.sum([t.samples for t in c.traces.values()], axis=0)
        agg = mean_normalize(aggregate_to_slots(total, 12))
        return agg @ p / np.linalg.norm(agg) / np.linalg.norm(p)

    means = [np.mean([cos(n, s) for s in range(10)]) for n in (4, 40, 400)]
    assert means[0] <= means[1] <= means[2]
