"""Ready-to-run scenarios: architectures A, B, C and the delivery-robot workload."""

from __future__ import annotations

import dataclasses
import hashlib
import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Optional

from ._time import to_us
from .catalog import Catalog, DataClass, DataKey
from .profiles import Profile, load_profile
from .protocol import Architecture, FailureMode, Request, StatusChange, Strategy
from .topology import (
    LinkKind, LinkSpec, NodeKind, NodeSpec, Shape, Topology, TopologySpec, build_topology,
    interconnect,
)

# Payload sizes are illustrative; links are pure delays, so only byte counters see them.
DELIVERY_KEYS = (
    DataKey("map/district", 2_000_000, DataClass.MAP),
    DataKey("image/obstacle-classifier", 500_000, DataClass.IMAGE),
    DataKey("speech/dialogue-model", 200_000, DataClass.SPEECH),
    DataKey("mltask/route-inference", 100_000, DataClass.ML_TASK),
)
DELIVERY_MIX = (
    (DataClass.MAP, 0.4),
    (DataClass.IMAGE, 0.3),
    (DataClass.SPEECH, 0.2),
    (DataClass.ML_TASK, 0.1),
)


@dataclass(frozen=True)
class Workload:
    period_ms: float = 100.0
    jitter_ms: float = 0.0
    mix: tuple = DELIVERY_MIX
    requesters: Optional[tuple[str, ...]] = None   # None: every robot
    stagger_ms: float = 0.0                        # k-th requester starts k * stagger later


@dataclass(frozen=True)
class FailureSpec:
    node: str
    at_ms: float
    mode: FailureMode = FailureMode.SHUTDOWN


@dataclass(frozen=True)
class Scenario:
    name: str
    topology: Topology
    architecture: Architecture
    keys: tuple[DataKey, ...] = DELIVERY_KEYS
    placement: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    workload: Workload = Workload()
    duration_ms: float = 10_000.0
    seed: int = 42
    profile_name: str = "default"
    exec_ms: float = 3.0
    cloud_universal: bool = True
    d2d_range_m: float = 5.0
    write_back: bool = False
    cache_ttl_ms: float = 60_000.0
    catalog_capacity: Mapping[str, int] = field(default_factory=dict)
    summaries: bool = True
    summary_size_bytes: int = 10_000
    summary_period_ms: float = 1_000.0
    summary_uses_capacity: bool = False
    request_bytes: int = 256
    miss_bytes: int = 64
    strategy: Strategy = Strategy.ROUND_TRIP
    drain: bool = True
    failures: tuple[FailureSpec, ...] = ()

    def __post_init__(self):
        if self.duration_ms <= 0:
            raise ValueError("duration must be > 0")
        object.__setattr__(self, "architecture", Architecture(self.architecture))
        object.__setattr__(self, "strategy", Strategy(self.strategy))

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def key(self, name: str) -> DataKey:
        for k in self.keys:
            if k.name == name:
                return k
        raise KeyError(name)

    def requesters(self) -> list[int]:
        topo = self.topology
        if self.workload.requesters is None:
            return [n.id for n in topo.robots]
        return sorted(topo.id_of(name) for name in self.workload.requesters)

    def requests(self) -> list[Request]:
        return workload(self)

    def workload_digest(self) -> str:
        h = hashlib.sha256()
        for r in self.requests():
            h.update(f"{self.topology.nodes[r.origin].name}|{r.issued_at}|{r.key.name};".encode())
        return h.hexdigest()[:16]

    def initial_catalogs(self) -> dict[int, Catalog]:
        topo = self.topology
        catalogs = {}
        for node in topo.nodes:
            catalogs[node.id] = Catalog(node.id, self.catalog_capacity.get(node.name))
        for name, held in self.placement.items():
            cat = catalogs[topo.id_of(name)]
            for key_name in held:
                if key_name == "*":
                    for k in self.keys:
                        cat.add_permanent(k)
                else:
                    cat.add_permanent(self.key(key_name))
        cloud = topo.cloud
        if self.cloud_universal and cloud is not None:
            for k in self.keys:
                catalogs[cloud.id].add_permanent(k)
        return catalogs

    def status_changes(self) -> list[StatusChange]:
        return [StatusChange(self.topology.id_of(f.node), FailureMode(f.mode).status, to_us(f.at_ms))
                for f in self.failures]

    def problems(self) -> list[str]:
        """Scenario-level checks beyond the topology invariants."""
        out = []
        cloud = self.topology.cloud
        if cloud is not None and not self.cloud_universal:
            held = set(self.placement.get(cloud.name, ()))
            if "*" not in held:
                for k in self._mix_keys():
                    if k.name not in held:
                        out.append(f"workload key {k.name} is not held by the cloud")
        classes = {k.data_class for k in self.keys}
        for cls, weight in self.workload.mix:
            if weight > 0 and cls not in classes:
                out.append(f"workload mix names class {cls.value} but no key has it")
        return out

    def _mix_keys(self) -> list[DataKey]:
        wanted = {cls for cls, w in self.workload.mix if w > 0}
        return [k for k in self.keys if k.data_class in wanted]


def workload(scenario: Scenario) -> list[Request]:
    """Periodic per-robot request stream, fully determined by ``(scenario, seed)``.

    The k-th requester issues at ``k * stagger + j * period + U{0..jitter}``
    for every ``j`` with the nominal time inside the run. Key classes follow the mix; the key within a
    class is uniform.
    """
    wl = scenario.workload
    rng = random.Random(scenario.seed)
    period = to_us(wl.period_ms)
    jitter = to_us(wl.jitter_ms)
    end = to_us(scenario.duration_ms)
    if period <= 0:
        raise ValueError("request period must be > 0")
    by_class: dict[DataClass, list[DataKey]] = {}
    for k in scenario.keys:
        by_class.setdefault(k.data_class, []).append(k)
    classes = [c for c, w in wl.mix if w > 0]
    weights = [w for c, w in wl.mix if w > 0]
    missing = [c.value for c in classes if c not in by_class]
    if missing:
        raise ValueError(f"workload mix names classes without keys: {', '.join(missing)}")

    stagger = to_us(wl.stagger_ms)
    pending = []
    for k, robot in enumerate(scenario.requesters()):
        j = 0
        while k * stagger + j * period < end:
            t = k * stagger + j * period + (rng.randint(0, jitter) if jitter else 0)
            cls = classes[0] if len(classes) == 1 else rng.choices(classes, weights)[0]
            pool = by_class[cls]
            key = pool[0] if len(pool) == 1 else rng.choice(pool)
            if t < end:
                pending.append((t, robot, key))
            j += 1
    pending.sort(key=lambda item: (item[0], item[1]))
    return [Request(i, robot, key, t) for i, (t, robot, key) in enumerate(pending)]


# -- builders ---------------------------------------------------------------

def _server_nodes(profile: Profile):
    return profile.model("frs"), profile.model("sfrs"), profile.model("cloud")


def _scenario(name, topology, architecture, profile: Profile, placement, seed, duration_ms,
              requesters=None, **extra) -> Scenario:
    wl = Workload(profile.request_period_ms, profile.jitter_ms, DELIVERY_MIX, requesters)
    return Scenario(
        name=name,
        topology=topology,
        architecture=Architecture(architecture),
        placement=placement,
        workload=wl,
        duration_ms=profile.duration_ms if duration_ms is None else duration_ms,
        seed=seed,
        profile_name=profile.name,
        exec_ms=profile.exec_ms,
        drain=profile.drain,
        **extra,
    )


def _default_arch(placement: str, fr_arch: Architecture, architecture) -> Architecture:
    if architecture is not None:
        return Architecture(architecture)
    if placement not in ("fr", "cloud"):
        raise ValueError("placement must be 'fr' or 'cloud'")
    return Architecture.CLOUD_ONLY if placement == "cloud" else fr_arch


def arch_a(n_robots: int = 1, *, profile="default", n_sfrs: int = 0, placement: str = "fr",
           architecture=None, seed: int = 42, duration_ms: Optional[float] = None,
           **extra) -> Scenario:
    """One FRS with ``n_robots`` robots in a star, plus gateway and cloud.

    ``placement="fr"`` puts every workload key on the FRS (and any SFRS);
    ``"cloud"`` leaves the fog tier empty and, unless ``architecture`` says
    otherwise, runs cloud-only. SFRS, when requested, hang off the FRS and
    take robots round-robin.
    """
    if n_robots < 1:
        raise ValueError("n_robots must be >= 1")
    prof = load_profile(profile)
    arch = _default_arch(placement, Architecture.A, architecture)
    frs_m, sfrs_m, cloud_m = _server_nodes(prof)
    lat = prof.latency_ms
    nodes = [
        NodeSpec("cloud", NodeKind.CLOUD, load_model=cloud_m),
        NodeSpec("gw", NodeKind.GATEWAY),
        NodeSpec("frs0", NodeKind.FRS, load_model=frs_m),
    ]
    links = [
        LinkSpec("gw", "cloud", LinkKind.BACKHAUL, lat[LinkKind.BACKHAUL]),
        LinkSpec("frs0", "gw", LinkKind.FRONTHAUL, lat[LinkKind.FRONTHAUL]),
    ]
    servers = ["frs0"]
    for s in range(n_sfrs):
        name = f"sfrs{s}"
        nodes.append(NodeSpec(name, NodeKind.SFRS, load_model=sfrs_m))
        links.append(LinkSpec(name, "frs0", LinkKind.ACCESS, lat[LinkKind.ACCESS]))
        servers.append(name)
    d2d_m = prof.model("d2d")
    for r in range(n_robots):
        name = f"r{r}"
        nodes.append(NodeSpec(name, NodeKind.ROBOT, load_model=d2d_m))
        links.append(LinkSpec(name, servers[r % len(servers)], LinkKind.ACCESS, lat[LinkKind.ACCESS]))
    topo = build_topology(TopologySpec(nodes, links, Shape.STAR))
    placement_map = {s: ("*",) for s in servers} if placement == "fr" else {}
    return _scenario("arch_a", topo, arch, prof, placement_map, seed, duration_ms, **extra)


def arch_b(n_robots: int = 2, d2d_range_m: float = 5.0, *, in_range: bool = True,
           spacing_m: float = 1.0, profile="default", placement: str = "fr", architecture=None,
           seed: int = 42, duration_ms: Optional[float] = None, **extra) -> Scenario:
    """Architecture A plus device-to-device links.

    A stationary peer robot (``peer``) at the origin holds the workload
    keys and issues nothing; the ``n_robots`` requesting robots sit on a
    circle around it, ``spacing_m`` away when in range, beyond
    ``d2d_range_m`` of everyone otherwise. D2D links join every pair within
    range. With six or fewer requesters the peer is each one's nearest
    neighbour.
    """
    if n_robots < 1:
        raise ValueError("n_robots must be >= 1")
    prof = load_profile(profile)
    arch = _default_arch(placement, Architecture.B, architecture)
    frs_m, _, cloud_m = _server_nodes(prof)
    d2d_m = prof.model("d2d")
    lat = prof.latency_ms
    if in_range:
        radius = spacing_m
    else:
        spread = math.sin(math.pi / n_robots) if n_robots > 1 else 1.0
        radius = 2 * d2d_range_m / spread
    positions = {"peer": (0.0, 0.0)}
    for r in range(n_robots):
        angle = 2 * math.pi * r / n_robots
        positions[f"r{r}"] = (round(radius * math.cos(angle), 9), round(radius * math.sin(angle), 9))
    nodes = [
        NodeSpec("cloud", NodeKind.CLOUD, load_model=cloud_m),
        NodeSpec("gw", NodeKind.GATEWAY),
        NodeSpec("frs0", NodeKind.FRS, load_model=frs_m),
    ]
    nodes += [NodeSpec(name, NodeKind.ROBOT, load_model=d2d_m, position=pos)
              for name, pos in positions.items()]
    links = [
        LinkSpec("gw", "cloud", LinkKind.BACKHAUL, lat[LinkKind.BACKHAUL]),
        LinkSpec("frs0", "gw", LinkKind.FRONTHAUL, lat[LinkKind.FRONTHAUL]),
    ]
    links += [LinkSpec(name, "frs0", LinkKind.ACCESS, lat[LinkKind.ACCESS]) for name in positions]
    names = list(positions)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            if math.dist(positions[a], positions[b]) <= d2d_range_m:
                links.append(LinkSpec(a, b, LinkKind.D2D, lat[LinkKind.D2D]))
    topo = build_topology(TopologySpec(nodes, links, Shape.STAR))
    placement_map = {"peer": ("*",)}
    if placement == "fr":
        placement_map["frs0"] = ("*",)
    requesters = tuple(f"r{r}" for r in range(n_robots))
    return _scenario("arch_b", topo, arch, prof, placement_map, seed, duration_ms,
                     requesters=requesters, d2d_range_m=d2d_range_m, **extra)


def arch_c(n_frs: int = 2, dsr_per_frs: int = 4, *, frs_shape: str = "mesh", profile="default",
           placement: str = "fr", architecture=None, seed: int = 42,
           duration_ms: Optional[float] = None, **extra) -> Scenario:
    """``n_frs`` FRS stars of ``dsr_per_frs`` robots, FRS interconnected, one gateway and cloud."""
    if n_frs < 2:
        raise ValueError("n_frs must be >= 2")
    prof = load_profile(profile)
    arch = _default_arch(placement, Architecture.C, architecture)
    frs_m, _, cloud_m = _server_nodes(prof)
    d2d_m = prof.model("d2d")
    lat = prof.latency_ms
    frs_names = [f"frs{f}" for f in range(n_frs)]
    nodes = [NodeSpec("cloud", NodeKind.CLOUD, load_model=cloud_m), NodeSpec("gw", NodeKind.GATEWAY)]
    nodes += [NodeSpec(name, NodeKind.FRS, load_model=frs_m) for name in frs_names]
    links = [LinkSpec("gw", "cloud", LinkKind.BACKHAUL, lat[LinkKind.BACKHAUL])]
    links += [LinkSpec(name, "gw", LinkKind.FRONTHAUL, lat[LinkKind.FRONTHAUL]) for name in frs_names]
    links += [LinkSpec(a, b, LinkKind.INTER_FRS, lat[LinkKind.INTER_FRS])
              for a, b in interconnect(frs_names, Shape(frs_shape))]
    for f, frs in enumerate(frs_names):
        for d in range(dsr_per_frs):
            name = f"r{f}_{d}"
            nodes.append(NodeSpec(name, NodeKind.ROBOT, load_model=d2d_m))
            links.append(LinkSpec(name, frs, LinkKind.ACCESS, lat[LinkKind.ACCESS]))
    topo = build_topology(TopologySpec(nodes, links, Shape(frs_shape)))
    placement_map = {name: ("*",) for name in frs_names} if placement == "fr" else {}
    return _scenario("arch_c", topo, arch, prof, placement_map, seed, duration_ms, **extra)


BUILDERS = {"a": arch_a, "b": arch_b, "c": arch_c}
