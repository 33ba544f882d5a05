"""Tiered request escalation: local cache, D2D peers, SFRS, FRS, peer FRS, cloud."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Optional

from .catalog import DataKey
from .topology import LinkKind, NodeKind, Status, Topology, neighbors_within


class Tier(IntEnum):
    LOCAL_CACHE = 0
    D2D = 1
    SFRS = 2
    FRS = 3
    PEER_FRS = 4
    CLOUD = 5

    @property
    def label(self) -> str:
        return _TIER_LABELS[self]


_TIER_LABELS = {
    Tier.LOCAL_CACHE: "local",
    Tier.D2D: "d2d",
    Tier.SFRS: "sfrs",
    Tier.FRS: "frs",
    Tier.PEER_FRS: "peerfrs",
    Tier.CLOUD: "cloud",
}


class Architecture(str, Enum):
    A = "A"
    B = "B"
    C = "C"
    CLOUD_ONLY = "CloudOnly"


class Strategy(str, Enum):
    ROUND_TRIP = "round-trip"        # every miss returns to the robot first
    FORWARD_CHAIN = "forward-chain"  # a miss is forwarded from target to the next tier


class OriginDown(Exception):
    pass


@dataclass(frozen=True)
class Request:
    id: int
    origin: int
    key: DataKey
    issued_at: int   # microseconds


@dataclass(frozen=True)
class PlanStep:
    tier: Tier
    target: int
    path: tuple[int, ...]   # robot -> target, link ids


@dataclass(frozen=True)
class ResolutionPlan:
    request: Request
    steps: tuple[PlanStep, ...]

    @property
    def tiers(self) -> list[Tier]:
        return [s.tier for s in self.steps]


@dataclass(frozen=True)
class Hop:
    link: int
    src: int
    dst: int
    latency_us: int
    nbytes: int


@dataclass(frozen=True)
class Attempt:
    tier: Tier
    target: int
    hit: bool
    wait_us: int = 0
    service_us: int = 0


@dataclass
class Resolution:
    request: Request
    resolved_tier: Optional[Tier]    # None means Failed
    hops: list[Hop] = field(default_factory=list)
    attempts: list[Attempt] = field(default_factory=list)
    exec_us: int = 0
    total_us: int = 0
    completed_at: int = 0
    bytes_by_kind: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.resolved_tier is None

    @property
    def latency_ms(self) -> float:
        return self.total_us / 1000


def plan(request: Request, topology: Topology, architecture: Architecture,
         d2d_range: float = 0.0, unavailable: Optional[frozenset] = None) -> ResolutionPlan:
    """List every tier eligible for ``request`` in escalation order.

    Tiers whose target is unavailable, or unreachable without crossing an
    unavailable node, are left out. Several targets may share a tier (D2D
    neighbours, peer FRS); they are tried in the listed order.
    """
    if unavailable is None:
        unavailable = frozenset(n.id for n in topology.nodes if n.status is not Status.UP)
    origin = request.origin
    if origin in unavailable:
        raise OriginDown(f"robot {topology.nodes[origin].name} is not up")
    architecture = Architecture(architecture)
    steps: list[PlanStep] = []

    def add(tier, target):
        if target is None or target in unavailable:
            return
        path = topology.path(origin, target, unavailable)
        if path is not None:
            steps.append(PlanStep(tier, target, path))

    cloud = topology.cloud
    if architecture is Architecture.CLOUD_ONLY:
        add(Tier.CLOUD, cloud.id if cloud else None)
        return ResolutionPlan(request, tuple(steps))

    steps.append(PlanStep(Tier.LOCAL_CACHE, origin, ()))

    if architecture is Architecture.B and d2d_range > 0 and topology.nodes[origin].position is not None:
        for peer in neighbors_within(topology, origin, d2d_range, unavailable):
            link = topology.link_between(origin, peer)
            if link is not None and link.kind is LinkKind.D2D:
                steps.append(PlanStep(Tier.D2D, peer, (link.id,)))

    server = topology.serving_server(origin)
    if server is not None and topology.nodes[server].kind is NodeKind.SFRS:
        add(Tier.SFRS, server)
    home = topology.home_frs(origin)
    add(Tier.FRS, home)

    if architecture is Architecture.C and home is not None and home not in unavailable:
        peers = []
        for other, link_id in topology.neighbors(home):
            if (topology.links[link_id].kind is LinkKind.INTER_FRS
                    and topology.nodes[other].kind is NodeKind.FRS):
                peers.append(other)
        for peer in sorted(set(peers), key=lambda p: (abs(p - home), p)):
            add(Tier.PEER_FRS, peer)

    add(Tier.CLOUD, cloud.id if cloud else None)
    return ResolutionPlan(request, tuple(steps))


class FailureMode(str, Enum):
    SHUTDOWN = "shutdown"
    COMPROMISE = "compromise"
    RECOVER = "recover"

    @property
    def status(self) -> Status:
        return {
            FailureMode.SHUTDOWN: Status.DOWN,
            FailureMode.COMPROMISE: Status.COMPROMISED,
            FailureMode.RECOVER: Status.UP,
        }[self]


@dataclass(frozen=True)
class StatusChange:
    node: int
    status: Status
    at: int   # microseconds


def handle_failure(topology: Topology, node, mode: FailureMode, at: int) -> StatusChange:
    """Status-change event for the engine to schedule.

    Compromised nodes route exactly like downed ones.
    """
    return StatusChange(topology.id_of(node), FailureMode(mode).status, at)


def recompute_latency_us(resolution: Resolution) -> int:
    """Re-add a resolution's components: link delays, queue waits, service, execution."""
    return (sum(h.latency_us for h in resolution.hops)
            + sum(a.wait_us + a.service_us for a in resolution.attempts)
            + resolution.exec_us)
