from fogrobotics import Architecture, Tier, arch_a, arch_b, arch_c, simulate
from fogrobotics.protocol import FailureMode, Request, Strategy, plan, recompute_latency_us
from fogrobotics.scenarios import FailureSpec, Workload


def _req(sc, robot="r0"):
    return Request(0, sc.topology.id_of(robot), sc.keys[0], 0)


def test_plan_arch_a():
    sc = arch_a(1)
    tiers = [s.tier for s in plan(_req(sc), sc.topology, Architecture.A).steps]
    assert tiers == [Tier.LOCAL_CACHE, Tier.FRS, Tier.CLOUD]
    assert simulate(sc, record_trace=False).report.tier_counts[Tier.FRS] == 100


def test_plan_cloud_only():
    sc = arch_a(1, placement="cloud")
    assert [s.tier for s in plan(_req(sc), sc.topology, sc.architecture).steps] == [Tier.CLOUD]


def test_arch_b_resolves_d2d_without_frs():
    sc = arch_b(2)
    res = simulate(sc).resolutions[0]
    assert res.resolved_tier is Tier.D2D
    frs = sc.topology.id_of("frs0")
    assert all(h.dst != frs and h.src != frs for h in res.hops)


def test_arch_c_peer_before_cloud():
    sc = arch_c(3, 1)
    placement = {"frs1": ("*",), "frs2": ("*",)}     # frs0 empty
    sc = sc.replace(placement=placement, workload=Workload(100.0, 0.0, sc.workload.mix, ("r0_0",)),
                    duration_ms=100)
    res = simulate(sc).resolutions[0]
    assert res.resolved_tier is Tier.PEER_FRS
    assert res.attempts[-1].target == sc.topology.id_of("frs1")


def test_cloud_only_277():
    assert simulate(arch_a(1, placement="cloud")).report.mean_us == 277_000


def test_frs_hit_9():
    assert simulate(arch_a(1)).report.mean_us == 9_000


def test_key_nowhere_fails_with_latency():
    sc = arch_a(1, placement="cloud", architecture="A", duration_ms=100).replace(cloud_universal=False)
    res = simulate(sc).resolutions[0]
    assert res.failed
    # FRS and cloud misses: 2*3 + 2*(3+4+130)
    assert res.total_us == 280_000
    assert simulate(sc).report.failed_count == 1


def test_round_trip_vs_forward_chain():
    sc = arch_a(1, placement="cloud", architecture="A", duration_ms=100)
    assert simulate(sc).report.mean_us == 283_000
    assert simulate(sc.replace(strategy=Strategy.FORWARD_CHAIN)).report.mean_us == 277_000


def test_additivity_recompute():
    for res in simulate(arch_a(5, profile="paper-fig3")).resolutions:
        assert recompute_latency_us(res) == res.total_us


def test_failure_modes_map_to_status():
    assert FailureMode.SHUTDOWN.status.value == "down"
    assert FailureMode.COMPROMISE.status.value == "compromised"
    assert FailureMode.RECOVER.status.value == "up"


def test_recover_routes_as_before():
    sc = arch_a(1, duration_ms=1000).replace(failures=(
        FailureSpec("frs0", 250.0, FailureMode.SHUTDOWN), FailureSpec("frs0", 550.0, FailureMode.RECOVER)))
    rows = simulate(sc).report.per_request
    by_time = {r.request_id: r for r in rows}
    tiers = [by_time[i].tier for i in range(10)]
    assert tiers[:3] == [Tier.FRS] * 3
    # the robot's only uplink runs through the downed FRS
    assert tiers[3:6] == [None] * 3
    assert tiers[6:] == [Tier.FRS] * 4
    assert all(by_time[i].latency_us == 9_000 for i in (0, 1, 2, 6, 7, 8, 9))
