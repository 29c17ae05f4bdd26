import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phaseplace.workload import (
    ApplicationClass,
    ConfigError,
    DiskTrace,
    ProvisioningRequest,
    ResourceSpec,
    aggregate_to_slots,
    check_slots,
    replay_sample,
    slot_of,
)

DIVISORS = [k for k in range(1, 289) if 288 % k == 0]


@pytest.mark.parametrize("t,expected", [(0, 0), (7200, 1), (86399, 11)])
def test_slot_of_examples(t, expected):
    assert slot_of(t, 12) == expected


@pytest.mark.parametrize("K", [0, 5, 7, 500])
def test_slot_of_rejects_bad_k(K):
    with pytest.raises(ConfigError):
        slot_of(0, K)


def test_slot_of_rejects_negative_time():
    with pytest.raises(ValueError):
        slot_of(-1, 12)


@given(st.floats(0, 1e7, allow_nan=False), st.sampled_from(DIVISORS))
def test_slot_of_is_daily_periodic(t, K):
    assert slot_of(t, K) == slot_of(t + 86400, K)
    assert 0 <= slot_of(t, K) < K


def test_aggregate_constant():
    assert np.allclose(aggregate_to_slots(np.full(288, 5.0), 12), 5.0)


def test_aggregate_half_days():
    s = np.r_[np.full(144, 2.0), np.full(144, 4.0)]
    assert aggregate_to_slots(s, 2).tolist() == [2.0, 4.0]


def test_aggregate_averages_days():
    s = np.r_[np.full(288, 1.0), np.full(288, 3.0)]
    assert np.allclose(aggregate_to_slots(s, 12), 2.0)


@given(
    st.lists(st.floats(0, 1e5, allow_nan=False), min_size=288, max_size=288),
    st.integers(1, 3),
    st.sampled_from(DIVISORS),
)
def test_aggregate_mean_equals_trace_mean(day, days, K):
    s = np.tile(np.array(day), days)
    assert abs(aggregate_to_slots(s, K).mean() - s.mean()) <= 1e-9 * max(1.0, s.mean())


def test_replay_examples():
    tr = DiskTrace(0, np.arange(288, dtype=float))
    assert replay_sample(tr, 0) == 0.0
    assert replay_sample(tr, 86400) == 0.0
    assert replay_sample(tr, 600) == 2.0


@given(st.floats(0, 1e7, allow_nan=False), st.integers(1, 3))
def test_replay_wraps_at_trace_length(t, days):
    tr = DiskTrace(1, np.arange(288 * days, dtype=float))
    assert replay_sample(tr, t) == replay_sample(tr, t + len(tr.samples) * 300)


def test_trace_validation():
    with pytest.raises(ValueError):
        DiskTrace(0, np.ones(100))
    with pytest.raises(ValueError):
        DiskTrace(0, -np.ones(288))
    with pytest.raises(ValueError):
        DiskTrace(0, np.ones(300))


def test_spec_fields_positive():
    with pytest.raises(ValueError):
        ResourceSpec(0, 4, 100, 30)
    with pytest.raises(ValueError):
        ResourceSpec(2, 4, 100.5, 30)


def test_request_round_trip():
    r = ProvisioningRequest(3, 12.5, "shop", "backend", "mysql-prod-01",
                            ResourceSpec(4, 16, 500, 365, "data", "hdd"))
    assert ProvisioningRequest.from_dict(r.to_dict()) == r


def test_taxonomy():
    assert len(ApplicationClass) == 28
    semantic = [c for c in ApplicationClass if c.is_semantic]
    assert len(semantic) == 27
    assert not ApplicationClass.UNKNOWN.is_semantic


def test_check_slots_returns_k():
    assert check_slots(24) == 24
