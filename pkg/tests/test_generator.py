import numpy as np
import pytest

from phaseplace.corpus_io import read_corpus, write_corpus
from phaseplace.generator import (
    GeneratorConfig,
    default_templates,
    diurnal_shape,
    generate_corpus,
    inject_noise,
    noisy_ids,
)
from phaseplace.semantics import NoiseFilter
from phaseplace.workload import ApplicationClass, ConfigError, aggregate_to_slots

C = ApplicationClass
TEMPLATES = {t.label: t for t in default_templates()}


def test_templates_cover_default_mix():
    assert set(GeneratorConfig().class_mix) <= set(TEMPLATES)
    for t in TEMPLATES.values():
        assert abs(t.base_shape.mean() - 1) < 1e-9
        assert t.burstiness >= 1


def test_diurnal_shape_mean_one():
    s = diurnal_shape(14.0, 3.0)
    assert len(s) == 24 and abs(s.mean() - 1) < 1e-12 and s.min() >= 0


def test_config_validation():
    with pytest.raises(ConfigError):
        GeneratorConfig(class_mix={C.GAMING: 0.5})
    with pytest.raises(ConfigError):
        GeneratorConfig(unknown_fraction=1.5)
    with pytest.raises(ConfigError):
        GeneratorConfig(class_mix={C.UNKNOWN: 1.0})


def test_missing_template_is_config_error():
    with pytest.raises(ConfigError):
        generate_corpus(GeneratorConfig(n_disks=5, class_mix={C.GAMING: 1.0}),
                        [TEMPLATES[C.DATABASE]])


def test_all_unknown_names_are_filtered():
    c = generate_corpus(GeneratorConfig(n_disks=200, seed=1, days=1, unknown_fraction=1.0))
    nf = NoiseFilter()
    assert all(nf(*r.metadata) for r in c.requests)


def test_single_class_mix():
    c = generate_corpus(GeneratorConfig(n_disks=100, seed=2, days=1,
                                        class_mix={C.OFFICE_SYSTEM: 1.0}))
    assert set(c.ground_truth.labels.values()) == {C.OFFICE_SYSTEM}


def test_corpus_files_byte_identical(tmp_path):
    cfg = GeneratorConfig(n_disks=60, seed=7, days=1)
    for name in ("a", "b"):
        write_corpus(tmp_path / name, generate_corpus(cfg))
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*.*"))
    assert files
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_corpus_round_trip(tmp_path, small_corpus):
    write_corpus(tmp_path, small_corpus)
    back = read_corpus(tmp_path, need_ground_truth=True)
    assert back.requests == small_corpus.requests
    assert back.traces == small_corpus.traces
    assert back.ground_truth.labels == small_corpus.ground_truth.labels
    assert back.ground_truth.intensities == small_corpus.ground_truth.intensities


def test_arrivals_sorted_and_ids_unique(small_corpus):
    arr = [r.arrival_time_s for r in small_corpus.requests]
    assert arr == sorted(arr)
    assert len({r.request_id for r in small_corpus.requests}) == len(arr)
    assert all(0 <= a < 86400 for a in arr)


def test_slot_means_match_profile_without_jitter():
    c = generate_corpus(GeneratorConfig(n_disks=50, seed=4, days=2, jitter_sigma=0.0,
                                        day_sigma=0.0))
    for r in c.requests:
        rid = r.request_id
        expected = c.ground_truth.intensities[rid] * c.ground_truth.profiles[rid]
        assert np.allclose(aggregate_to_slots(c.traces[rid], 24), expected, atol=1e-6, rtol=0)


def _mean_shape_distance(label, n, seed):
    c = generate_corpus(GeneratorConfig(n_disks=n, class_mix={label: 1.0}, unknown_fraction=0.0,
                                        seed=seed, days=1))
    mean = np.mean(list(c.ground_truth.profiles.values()), axis=0)
    return np.max(np.abs(mean - TEMPLATES[label].base_shape))


@pytest.mark.parametrize("label", [C.DATABASE, C.GAMING])
def test_shape_mean_concentrates(label):
    r100 = np.mean([_mean_shape_distance(label, 100, s) for s in range(20)])
    r400 = np.mean([_mean_shape_distance(label, 400, s) for s in range(20)])
    print(f"{label.value}: r(100)={r100:.4f} r(400)={r400:.4f} ratio={r400 / r100:.3f}")
    assert r400 <= 0.5 * r100


def test_inject_noise_examples(small_corpus):
    reqs = small_corpus.requests
    assert inject_noise(reqs, 0.0, 1) == reqs
    full = inject_noise(reqs, 1.0, 1)
    assert len(noisy_ids(reqs, full)) == len(reqs)
    for r in full:
        assert all(12 <= len(f) <= 32 for f in r.metadata)
    with pytest.raises(ConfigError):
        inject_noise(reqs, 1.5)


def test_inject_noise_exact_count():
    c = generate_corpus(GeneratorConfig(n_disks=1000, seed=9, days=1))
    noisy = inject_noise(c.requests, 0.5, seed=2)
    assert len(noisy_ids(c.requests, noisy)) == 500
    assert [r.spec for r in noisy] == [r.spec for r in c.requests]
