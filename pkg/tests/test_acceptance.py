"""Acceptance criteria. A PASS/FAIL line per criterion is printed at the end of the run.

Tolerances and runtime budgets are fixed here and not tuned to results.
"""

import dataclasses
import time

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from fogrobotics import arch_a, arch_b, arch_c, simulate
from fogrobotics.advisor import ServerStats, TrafficStats, collect_stats, frs_capacities, recommend_sfrs
from fogrobotics.cli import fig3_rows, fig4_rows, main
from fogrobotics.metrics import compare
from fogrobotics.protocol import plan, recompute_latency_us
from fogrobotics.scenarios import FailureSpec, Workload
from fogrobotics.scnfile import SHIPPED, load_scenario

import oracle

C1 = pytest.mark.criterion(1, "analytic baselines 277 / 9 / 7 ms, oracle-checked, < 1 s")
C2 = pytest.mark.criterion(2, "robot-count curves under paper-fig3, < 10 s")
C3 = pytest.mark.criterion(3, "FRS-count curves under paper-fig4, < 30 s")
C4 = pytest.mark.criterion(4, "property suite")
C5 = pytest.mark.criterion(5, "oracle equivalence on shipped scenarios (exact us)")

# reported figure values
FIG3_FR = {1: 8.82, 4: 10.96, 5: 19.75}
FIG3_CLOUD = {1: 276.58, 5: 276.97}
FIG3_D2D = {1: 3.8, 5: 6.75}
FIG4_FR = 10.967
FIG4_CLOUD = {2: 277.27, 5: 278.47, 10: 2126.52, 15: 3152.94, 20: 3666.07}


def lerp(points, n):
    (x0, y0), (x1, y1) = sorted(points.items())[0], sorted(points.items())[-1]
    return y0 + (y1 - y0) * (n - x0) / (x1 - x0)


def fr_target(n):
    # robots 2 and 3 are read off the 1..4 linear rise
    return FIG3_FR[n] if n in FIG3_FR else lerp({1: FIG3_FR[1], 4: FIG3_FR[4]}, n)


# -- criterion 1 ------------------------------------------------------------

@C1
def test_analytic_baselines():
    t0 = time.perf_counter()
    cases = [(arch_a(1, placement="cloud"), 277_000), (arch_a(1), 9_000), (arch_b(2), 7_000)]
    for sc, expected in cases:
        result = simulate(sc)
        assert result.report.mean_us == expected
        for res in result.resolutions:
            assert res.total_us == expected
            tier, lat = oracle.resolve(sc, res.request.origin, res.request.key.name)
            assert (tier, lat) == (res.resolved_tier.label, res.total_us)
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0, f"took {elapsed:.2f} s"


# -- criterion 2 ------------------------------------------------------------

@C2
def test_fig3():
    t0 = time.perf_counter()
    rows = {(s, n): us / 1000 for s, n, us in fig3_rows()}
    elapsed = time.perf_counter() - t0
    for n in range(1, 6):
        assert rows["Cloud", n] == pytest.approx(lerp(FIG3_CLOUD, n), rel=0.01)
        assert rows["FR", n] == pytest.approx(fr_target(n), rel=0.05)
    for n, v in FIG3_D2D.items():
        assert rows["D2D", n] == pytest.approx(v, rel=0.10)
    # the jump at five robots, not a continuation of the slope
    assert rows["FR", 5] - rows["FR", 4] > 3 * (rows["FR", 4] - rows["FR", 3])
    assert elapsed < 10.0, f"took {elapsed:.2f} s"


# -- criterion 3 ------------------------------------------------------------

@C3
def test_fig4():
    t0 = time.perf_counter()
    rows = {(s, n): us / 1000 for s, n, us in fig4_rows()}
    elapsed = time.perf_counter() - t0
    for n, v in FIG4_CLOUD.items():
        assert rows["FR", n] == pytest.approx(FIG4_FR, abs=0.1)
        assert rows["Cloud", n] == pytest.approx(v, rel=0.10)
    assert rows["Cloud", 10] >= 7 * rows["Cloud", 5]
    assert elapsed < 30.0, f"took {elapsed:.2f} s"


# -- criterion 4 ------------------------------------------------------------

@C4
def test_determinism_traces():
    for build in (lambda: arch_a(5, profile="paper-fig3"), lambda: arch_b(4, profile="paper-fig3"),
                  lambda: arch_c(4, 4, profile="paper-fig4", duration_ms=3000)):
        assert simulate(build()).trace_text().encode() == simulate(build()).trace_text().encode()


@C4
def test_determinism_parallel_sweep(tmp_path):
    args = ["sweep", "--arch", "c", "--frs", "2,5,10", "--seeds", "7,8", "--profile", "paper-fig4",
            "--duration", "2000"]
    serial, parallel = tmp_path / "s.csv", tmp_path / "p.csv"
    assert main(args + ["--out", str(serial)]) == 0
    assert main(args + ["--jobs", "4", "--out", str(parallel)]) == 0
    assert serial.read_bytes() == parallel.read_bytes()


placements = st.lists(st.sets(st.sampled_from(["map/district", "image/obstacle-classifier",
                                               "speech/dialogue-model", "mltask/route-inference"])),
                      min_size=3, max_size=3)


@C4
@settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(held=placements, seed=st.integers(0, 1000))
def test_tier_minimality(held, seed):
    sc = arch_c(3, 2, seed=seed, duration_ms=1000)
    sc = sc.replace(placement={f"frs{i}": tuple(h) for i, h in enumerate(held)})
    catalogs = sc.initial_catalogs()
    for res in simulate(sc).resolutions:
        steps = plan(res.request, sc.topology, sc.architecture, sc.d2d_range_m).steps
        first = next(s for s in steps if catalogs[s.target].lookup(res.request.key, 0))
        assert res.resolved_tier is first.tier
        assert all(not a.hit for a in res.attempts[:-1]) and res.attempts[-1].hit


@C4
def test_latency_additivity():
    for sc in (arch_a(5, profile="paper-fig3"), arch_b(5, profile="paper-fig3"),
               arch_c(10, 4, profile="paper-fig4", placement="cloud"),
               arch_a(3, placement="cloud", architecture="A")):
        result = simulate(sc)
        assert result.resolutions
        for res in result.resolutions:
            assert recompute_latency_us(res) == res.total_us


@C4
def test_request_conservation():
    for sc in (arch_a(5, profile="paper-fig3"), arch_c(15, 4, profile="paper-fig4", placement="cloud"),
               arch_c(5, 4).replace(failures=(FailureSpec("frs1", 2500.0),))):
        result = simulate(sc, record_trace=False)
        r = result.report
        issued = len(sc.requests())
        assert r.requests == issued
        assert issued == r.resolved_count + r.failed_count + r.unfinished_count
        if sc.drain:
            assert r.unfinished_count == 0


@C4
def test_capacity_safety_and_fifo():
    for sc in (arch_a(5, profile="paper-fig3"), arch_c(20, 4, profile="paper-fig4", placement="cloud")):
        result = simulate(sc)
        servers = result.simulation.servers
        for s in servers.values():
            assert s.max_occupied <= s.model.concurrency_capacity
            assert s.arrivals[:len(s.admissions)] == s.admissions
        for rec in result.trace:
            if rec.node in servers and rec.in_service is not None:
                assert rec.in_service <= servers[rec.node].model.concurrency_capacity


def _latencies_by_robot(result):
    out = {}
    for row in result.report.per_request:
        out.setdefault(row.robot, []).append((row.request_id, row.latency_us, row.tier))
    return out


@C4
@pytest.mark.parametrize("profile", ["default", "paper-fig4"])
def test_failure_isolation(profile):
    base = arch_c(5, 4, profile=profile)
    down = base.replace(failures=(FailureSpec("frs2", 0.0),))
    a, b = _latencies_by_robot(simulate(base)), _latencies_by_robot(simulate(down))
    topo = base.topology
    affected = {n.id for n in topo.robots if topo.home_frs(n.id) == topo.id_of("frs2")}
    others = [r for r in a if r not in affected]
    assert len(affected) == 4 and len(others) == 16
    for r in others:
        assert a[r] == b[r]
    assert all(a[r] != b[r] for r in affected)


@C4
def test_offline_operation():
    for sc in (arch_a(3), arch_c(5, 4, profile="paper-fig4")):
        base = simulate(sc).report
        off = simulate(sc.replace(failures=(FailureSpec("cloud", 0.0),))).report
        assert [(r.request_id, r.latency_us, r.tier) for r in off.per_request] == \
            [(r.request_id, r.latency_us, r.tier) for r in base.per_request]
    # cloud-only keys fail once the cloud is gone
    sc = arch_a(1, placement="cloud", architecture="A").replace(failures=(FailureSpec("cloud", 0.0),))
    assert simulate(sc).report.failed_count == len(sc.requests())


@C4
def test_fronthaul_burden():
    pairs = [(arch_a(n), arch_a(n, placement="cloud")) for n in (1, 3, 5)]
    pairs += [(arch_c(5, 4), arch_c(5, 4, placement="cloud"))]
    for fr_sc, cr_sc in pairs:
        cmp = compare(simulate(fr_sc).report, simulate(cr_sc).report)
        assert cmp.fr_hit_rate > 0
        assert cmp.fr_fronthaul_bytes <= cmp.cr_fronthaul_bytes


@C4
def test_arch_c_flatness():
    default = {simulate(arch_c(n, 4), record_trace=False).report.mean_us for n in (2, 5, 10, 15, 20)}
    assert default == {9_000}
    fig4 = [simulate(arch_c(n, 4, profile="paper-fig4"), record_trace=False).report.mean_us
            for n in (2, 5, 10, 15, 20)]
    assert max(fig4) - min(fig4) <= 100   # 0.1 ms


@C4
@given(st.integers(0, 500), st.integers(0, 500), st.integers(1, 32), st.floats(0.01, 1.0))
def test_advisor_monotone(p1, p2, cap, threshold):
    lo, hi = sorted((p1, p2))

    def count(peak):
        stats = TrafficStats({0: ServerStats(peak_load=peak)}, (0, 1))
        return dict(recommend_sfrs(stats, {0: cap}, threshold)).get(0, 0)

    assert count(lo) <= count(hi)


@C4
def test_acting_on_advice():
    sat = simulate(arch_a(5, profile="paper-fig3"))
    topo = sat.scenario.topology
    advice = dict(recommend_sfrs(collect_stats(sat.trace), frs_capacities(topo)))
    extra = advice[topo.id_of("frs0")]
    assert extra >= 1
    fixed = simulate(arch_a(5, profile="paper-fig3", n_sfrs=extra), record_trace=False).report
    assert fixed.mean_us < sat.report.mean_us


# -- criterion 5 ------------------------------------------------------------

def _sparse(sc, names):
    """At most three requesters, staggered so no two requests overlap anywhere."""
    return sc.replace(workload=Workload(1000.0, 0.0, sc.workload.mix, tuple(names[:3]), 300.0),
                      duration_ms=5000)


def _check_oracle(sc):
    result = simulate(sc)
    assert result.resolutions
    for res in result.resolutions:
        expected = oracle.resolve(sc, res.request.origin, res.request.key.name)
        got = (res.resolved_tier.label if res.resolved_tier is not None else None, res.total_us)
        assert got == expected, f"request {res.request.id}"


@C5
@pytest.mark.parametrize("profile", ["default", "paper-fig3", "paper-fig4"])
@pytest.mark.parametrize("name", SHIPPED)
def test_oracle_shipped(name, profile):
    sc = load_scenario(name, profile)
    robots = [n.name for n in sc.topology.robots if n.name in {
        sc.topology.nodes[i].name for i in sc.requesters()}]
    _check_oracle(_sparse(sc, robots))


@C5
@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(name=st.sampled_from(SHIPPED), held=placements, seed=st.integers(0, 10**6),
       arch=st.sampled_from(["A", "B", "C", "CloudOnly"]))
def test_oracle_random_placement(name, held, seed, arch):
    sc = load_scenario(name)
    servers = [n.name for n in sc.topology.nodes if n.kind.value in ("frs", "robot")
               and n.name not in {sc.topology.nodes[i].name for i in sc.requesters()[:3]}]
    placement = {servers[i % len(servers)]: tuple(h) for i, h in enumerate(held)}
    sc = dataclasses.replace(sc, placement=placement, seed=seed, architecture=arch)
    robots = [sc.topology.nodes[i].name for i in sc.requesters()]
    _check_oracle(_sparse(sc, robots))
