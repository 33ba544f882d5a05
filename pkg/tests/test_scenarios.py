import pytest
from hypothesis import given, strategies as st

from fogrobotics import Tier, arch_a, arch_b, arch_c, simulate
from fogrobotics.catalog import DataClass
from fogrobotics.scenarios import Workload, workload


def mean_ms(sc):
    return simulate(sc, record_trace=False).report.mean_ms


def test_arch_a_default_9():
    assert mean_ms(arch_a(1)) == 9.0


def test_arch_a_emptied_frs_goes_to_cloud():
    report = simulate(arch_a(1, placement="cloud", architecture="A")).report
    assert report.tier_counts[Tier.CLOUD] == report.requests
    # each request first misses at the FRS (one 6 ms round trip) and then pays the 277 ms cloud path
    assert report.mean_ms == 283.0


def test_arch_b_in_range_7():
    assert mean_ms(arch_b(2)) == 7.0


def test_arch_b_out_of_range_matches_arch_a():
    report = simulate(arch_b(2, in_range=False)).report
    assert report.tier_counts[Tier.FRS] == report.requests
    assert report.mean_ms == mean_ms(arch_a(1))


def test_arch_c_default_flat():
    assert mean_ms(arch_c(5, 4)) == 9.0


def test_builders_reject_bad_sizes():
    with pytest.raises(ValueError):
        arch_a(0)
    with pytest.raises(ValueError):
        arch_c(1)


def test_workload_periodic():
    sc = arch_a(1, duration_ms=1000)
    times = [r.issued_at for r in workload(sc)]
    assert times == [i * 100_000 for i in range(10)]


def test_workload_single_class():
    sc = arch_a(2).replace(workload=Workload(100.0, 0.0, ((DataClass.MAP, 1.0),), None))
    assert {r.key.data_class for r in workload(sc)} == {DataClass.MAP}


@given(st.integers(0, 2**32), st.integers(0, 60))
def test_workload_deterministic(seed, jitter):
    sc = arch_a(3, seed=seed, duration_ms=500)
    sc = sc.replace(workload=Workload(100.0, float(jitter), sc.workload.mix, None))
    assert workload(sc) == workload(sc)
    reqs = workload(sc)
    assert [r.id for r in reqs] == list(range(len(reqs)))
    assert all(r.issued_at < 500_000 for r in reqs)


def test_stagger_offsets_requesters():
    sc = arch_a(3, duration_ms=1000)
    sc = sc.replace(workload=Workload(1000.0, 0.0, sc.workload.mix, None, 200.0))
    assert [r.issued_at for r in workload(sc)] == [0, 200_000, 400_000]


def test_problems_flags_unheld_keys():
    sc = arch_a(1, placement="cloud").replace(cloud_universal=False)
    assert sc.problems()
