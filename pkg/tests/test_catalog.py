import pytest
from hypothesis import given, strategies as st

from fogrobotics import arch_a, arch_c, simulate
from fogrobotics.catalog import CapacityFullOfPermanents, Catalog, DataClass, DataKey
from fogrobotics.scenarios import FailureSpec, Workload
from fogrobotics.topology import LinkKind

MAP = DataKey("map/a", 1000, DataClass.MAP)
IMG = DataKey("img/a", 500, DataClass.IMAGE)


def test_permanent_hit():
    assert Catalog(0, permanent=[MAP]).lookup(MAP, 10**9)


def test_transient_expiry_boundary():
    cat = Catalog(0)
    cat.cache_insert(MAP, 0, 10)
    assert cat.lookup(MAP, 9)
    assert not cat.lookup(MAP, 11)
    assert not cat.lookup(MAP, 10)


def test_insert_sets_expiry():
    cat = Catalog(0)
    cat.cache_insert(MAP, 5, 60)
    assert cat.entries[MAP.name].expires_at == 65


def test_full_of_transients_evicts_earliest():
    cat = Catalog(0, capacity=2)
    cat.cache_insert(MAP, 0, 100)
    cat.cache_insert(IMG, 0, 50)
    third = DataKey("speech/a", 10, DataClass.SPEECH)
    cat.cache_insert(third, 1, 100)
    assert IMG.name not in cat and MAP.name in cat and third.name in cat


def test_full_of_permanents():
    cat = Catalog(0, capacity=1, permanent=[MAP])
    with pytest.raises(CapacityFullOfPermanents):
        cat.cache_insert(IMG, 0, 10)


def test_evict_expired_counts():
    cat = Catalog(0, permanent=[MAP])
    assert cat.evict_expired(0) == 0
    for i in range(3):
        cat.cache_insert(DataKey(f"k{i}", 1), 0, 5)
    cat.cache_insert(DataKey("live", 1), 0, 50)
    assert cat.evict_expired(10) == 3
    assert cat.evict_expired(10) == 0
    assert "live" in cat


def test_payload_must_be_positive():
    with pytest.raises(ValueError):
        DataKey("x", 0)


@given(st.lists(st.tuples(st.integers(0, 100), st.integers(1, 100)), max_size=30), st.integers(1, 5))
def test_capacity_never_exceeded(inserts, capacity):
    cat = Catalog(0, capacity=capacity)
    for i, (now, ttl) in enumerate(inserts):
        cat.cache_insert(DataKey(f"k{i % 7}", 1), now, ttl)
        assert len(cat) <= capacity


def test_cloud_hit_after_frs_miss():
    sc = arch_a(1, placement="cloud", architecture="A", duration_ms=100)
    res = simulate(sc).resolutions[0]
    assert [(a.tier.label, a.hit) for a in res.attempts] == [("local", False), ("frs", False), ("cloud", True)]


def test_write_back_then_frs_hit():
    # the second request is issued after the first has been written back
    wl = Workload(500.0, 0.0, ((DataClass.MAP, 1.0),), None)
    sc = arch_a(1, placement="cloud", architecture="A", duration_ms=1000).replace(
        write_back=True, workload=wl)
    first, second = simulate(sc).resolutions
    assert first.resolved_tier.label == "cloud"
    assert second.resolved_tier.label == "frs"
    assert second.total_us == 9_000


def test_summary_count():
    result = simulate(arch_c(2, 1, duration_ms=5000))
    per_frs = {}
    for s in result.summaries:
        per_frs[s.frs] = per_frs.get(s.frs, 0) + 1
    assert sorted(per_frs.values()) == [5, 5]


def test_summary_fronthaul_bytes():
    result = simulate(arch_c(2, 1, duration_ms=3000))
    assert result.report.summary_bytes_by_link_kind[LinkKind.FRONTHAUL] == 6 * 10**4


def test_cloud_down_no_summaries_requests_served():
    sc = arch_a(1, duration_ms=5000).replace(failures=(FailureSpec("cloud", 0.0),))
    result = simulate(sc)
    assert not any(s.delivered for s in result.summaries)
    assert result.report.failed_count == 0
    assert result.report.mean_us == 9_000
