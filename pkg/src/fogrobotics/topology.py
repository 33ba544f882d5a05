"""Node/link graph for fog and cloud robotics deployments.

A :class:`Topology` is an immutable value. Runtime status changes (failures)
are tracked by the engine, which passes the set of unavailable nodes into
:meth:`Topology.path` and :func:`neighbors_within`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import TYPE_CHECKING, Iterable, Mapping, Optional, Sequence

import networkx as nx

from ._time import to_ms, to_us

if TYPE_CHECKING:
    from .engine import ServerLoadModel


class NodeKind(str, Enum):
    ROBOT = "robot"
    SFRS = "sfrs"
    FRS = "frs"
    GATEWAY = "gateway"
    CLOUD = "cloud"

    @property
    def is_server(self) -> bool:
        return self in (NodeKind.SFRS, NodeKind.FRS, NodeKind.CLOUD)


class Status(str, Enum):
    UP = "up"
    DOWN = "down"
    COMPROMISED = "compromised"


class LinkKind(str, Enum):
    ACCESS = "access"
    FRONTHAUL = "fronthaul"
    BACKHAUL = "backhaul"
    D2D = "d2d"
    INTER_FRS = "interfrs"


class Shape(str, Enum):
    BUS = "bus"
    STAR = "star"
    MESH = "mesh"
    TREE = "tree"
    CUSTOM = "custom"


class TopologyError(ValueError):
    pass


class DuplicateLink(TopologyError):
    pass


class DanglingEndpoint(TopologyError):
    pass


class MissingCloudPath(TopologyError):
    pass


class InvalidTopology(TopologyError):
    pass


class NotARobot(TopologyError):
    pass


class MissingPosition(TopologyError):
    pass


@dataclass(frozen=True)
class Node:
    id: int
    name: str
    kind: NodeKind
    status: Status = Status.UP
    load_model: Optional["ServerLoadModel"] = None
    position: Optional[tuple[float, float]] = None


@dataclass(frozen=True)
class Link:
    id: int
    a: int
    b: int
    kind: LinkKind
    latency_us: int

    @property
    def latency_ms(self) -> float:
        return to_ms(self.latency_us)

    @property
    def pair(self) -> frozenset:
        return frozenset((self.a, self.b))

    def other(self, node: int) -> int:
        return self.b if node == self.a else self.a


@dataclass(frozen=True)
class Topology:
    """Typed node/link graph. Construct through :func:`build_topology`.

    Direct construction skips validation, which is occasionally useful for
    exercising :func:`validate` on broken graphs.
    """

    nodes: tuple[Node, ...]
    links: tuple[Link, ...]
    shape: Shape = Shape.CUSTOM
    _adj: dict = field(init=False, repr=False, compare=False)
    _by_name: dict = field(init=False, repr=False, compare=False)
    _graph: nx.Graph = field(init=False, repr=False, compare=False)
    _paths: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        adj: dict[int, list[tuple[int, int]]] = {n.id: [] for n in self.nodes}
        graph = nx.Graph()
        graph.add_nodes_from(n.id for n in self.nodes)
        for link in self.links:
            for u, v in ((link.a, link.b), (link.b, link.a)):
                if u in adj:
                    adj[u].append((v, link.id))
            if link.a in adj and link.b in adj and not graph.has_edge(link.a, link.b):
                graph.add_edge(link.a, link.b, latency=link.latency_us, link=link.id)
        object.__setattr__(self, "_adj", {k: tuple(v) for k, v in adj.items()})
        object.__setattr__(self, "_by_name", {n.name: n for n in self.nodes})
        object.__setattr__(self, "_graph", graph)
        object.__setattr__(self, "_paths", {})

    def node(self, ref) -> Node:
        if isinstance(ref, Node):
            return ref
        if isinstance(ref, str):
            return self._by_name[ref]
        return self.nodes[ref]

    def id_of(self, ref) -> int:
        return self.node(ref).id

    def neighbors(self, node: int) -> tuple[tuple[int, int], ...]:
        """(neighbor id, link id) pairs in link order."""
        return self._adj[node]

    def link_between(self, a: int, b: int) -> Optional[Link]:
        for other, link_id in self._adj.get(a, ()):
            if other == b:
                return self.links[link_id]
        return None

    def of_kind(self, kind: NodeKind) -> list[Node]:
        return [n for n in self.nodes if n.kind is kind]

    @property
    def robots(self) -> list[Node]:
        return self.of_kind(NodeKind.ROBOT)

    @property
    def cloud(self) -> Optional[Node]:
        clouds = self.of_kind(NodeKind.CLOUD)
        return clouds[0] if clouds else None

    def serving_server(self, robot: int) -> Optional[int]:
        """The FRS or SFRS a robot reaches over its access link."""
        for other, link_id in self._adj[robot]:
            if (self.links[link_id].kind is LinkKind.ACCESS
                    and self.nodes[other].kind in (NodeKind.FRS, NodeKind.SFRS)):
                return other
        return None

    def parent_frs(self, sfrs: int) -> Optional[int]:
        for other, _ in self._adj[sfrs]:
            if self.nodes[other].kind is NodeKind.FRS:
                return other
        return None

    def home_frs(self, robot: int) -> Optional[int]:
        server = self.serving_server(robot)
        if server is None or self.nodes[server].kind is NodeKind.FRS:
            return server
        return self.parent_frs(server)

    def path(self, src: int, dst: int, unavailable: frozenset = frozenset()) -> Optional[tuple[int, ...]]:
        """Minimum-latency link path from ``src`` to ``dst``.

        Robots never relay traffic for others, and nodes in ``unavailable``
        are neither relays nor endpoints. Returns link ids, or None when no
        path exists.
        """
        if src in unavailable or dst in unavailable:
            return None
        if src == dst:
            return ()
        cache_key = (src, dst, unavailable)
        if cache_key in self._paths:
            return self._paths[cache_key]
        nodes = self.nodes

        def weight(u, v, attrs):
            if v != dst and (v in unavailable or nodes[v].kind is NodeKind.ROBOT):
                return None
            return attrs["latency"]

        try:
            hops = nx.dijkstra_path(self._graph, src, dst, weight=weight)
        except nx.NetworkXNoPath:
            result = None
        else:
            result = tuple(self._graph.edges[u, v]["link"] for u, v in zip(hops, hops[1:]))
        self._paths[cache_key] = result
        return result

    def path_latency_us(self, links: Iterable[int]) -> int:
        return sum(self.links[i].latency_us for i in links)


@dataclass(frozen=True)
class NodeSpec:
    name: str
    kind: NodeKind
    status: Status = Status.UP
    load_model: Optional["ServerLoadModel"] = None
    position: Optional[tuple[float, float]] = None


@dataclass(frozen=True)
class LinkSpec:
    a: str
    b: str
    kind: LinkKind
    latency_ms: float


@dataclass(frozen=True)
class TopologySpec:
    nodes: Sequence[NodeSpec]
    links: Sequence[LinkSpec]
    shape: Shape = Shape.CUSTOM
    require_cloud: bool = True


def build_topology(spec: TopologySpec) -> Topology:
    """Assign ordinals in spec order, check structural errors, validate."""
    ids: dict[str, int] = {}
    nodes = []
    for i, ns in enumerate(spec.nodes):
        if ns.name in ids:
            raise InvalidTopology(f"duplicate node name {ns.name!r}")
        ids[ns.name] = i
        nodes.append(Node(i, ns.name, ns.kind, ns.status, ns.load_model, ns.position))

    seen: dict[frozenset, int] = {}
    links = []
    for i, ls in enumerate(spec.links):
        for end in (ls.a, ls.b):
            if end not in ids:
                raise DanglingEndpoint(f"link {i} ({ls.a}-{ls.b}) names unknown node {end!r}")
        pair = frozenset((ids[ls.a], ids[ls.b]))
        if pair in seen:
            raise DuplicateLink(f"link {i} ({ls.a}-{ls.b}) duplicates link {seen[pair]}")
        seen[pair] = i
        latency = float(ls.latency_ms)
        if not math.isfinite(latency) or latency < 0:
            raise InvalidTopology(f"link {i} ({ls.a}-{ls.b}): latency must be finite and >= 0")
        links.append(Link(i, ids[ls.a], ids[ls.b], ls.kind, to_us(latency)))

    topo = Topology(tuple(nodes), tuple(links), spec.shape)
    violations = validate(topo)
    if spec.require_cloud:
        if topo.cloud is None:
            raise MissingCloudPath("cloud tier requested but topology has no cloud node")
        missing = [v for v in violations if "missing cloud path" in v]
        if missing:
            raise MissingCloudPath("; ".join(missing))
    if violations:
        raise InvalidTopology("; ".join(violations))
    return topo


def validate(topology: Topology) -> list[str]:
    """Return one description per violated invariant (empty when valid)."""
    out = []
    n = len(topology.nodes)
    names = set()
    for i, node in enumerate(topology.nodes):
        if node.id != i:
            out.append(f"node {node.name}: ordinal {node.id} != position {i} (ordinals must be dense)")
        if node.name in names:
            out.append(f"node {node.name}: duplicate name")
        names.add(node.name)
        if node.kind is NodeKind.GATEWAY and node.load_model is not None:
            out.append(f"node {node.name}: gateways carry no load model")

    pairs: dict[frozenset, int] = {}
    for link in topology.links:
        label = f"link {link.id} ({link.a}-{link.b})"
        if not (0 <= link.a < n and 0 <= link.b < n):
            out.append(f"{label}: dangling endpoint")
            continue
        if link.a == link.b:
            out.append(f"{label}: self-loop")
        if link.latency_us < 0:
            out.append(f"{label}: negative latency")
        if link.pair in pairs:
            out.append(f"{label}: duplicate link (same pair as link {pairs[link.pair]})")
        else:
            pairs[link.pair] = link.id
    if any("dangling" in v for v in out):
        return out

    for robot in topology.robots:
        if topology.serving_server(robot.id) is None:
            out.append(f"node {robot.name}: unreachable robot (no access link to an FRS/SFRS)")
    for sfrs in topology.of_kind(NodeKind.SFRS):
        if topology.parent_frs(sfrs.id) is None:
            out.append(f"node {sfrs.name}: SFRS has no parent FRS")

    clouds = topology.of_kind(NodeKind.CLOUD)
    if len(clouds) > 1:
        out.append(f"nodes {', '.join(c.name for c in clouds)}: more than one cloud node")
    if clouds:
        gateways = {g.id for g in topology.of_kind(NodeKind.GATEWAY)}
        if not gateways:
            out.append(f"node {clouds[0].name}: cloud present but no gateway")
        for frs in topology.of_kind(NodeKind.FRS):
            links = topology.path(frs.id, clouds[0].id)
            on_path = _nodes_on(topology, frs.id, links) if links is not None else set()
            if links is None or not (on_path & gateways):
                out.append(f"node {frs.name}: missing cloud path (no route to cloud via a gateway)")
    return out


def _nodes_on(topology: Topology, src: int, links: Sequence[int]) -> set[int]:
    seen = {src}
    cur = src
    for link_id in links:
        cur = topology.links[link_id].other(cur)
        seen.add(cur)
    return seen


def neighbors_within(topology: Topology, robot, range_m: float,
                     unavailable: Optional[frozenset] = None) -> list[int]:
    """Up robots within ``range_m`` of ``robot``, nearest first, ties by ordinal.

    ``unavailable`` overrides the topology's initial statuses (the engine
    passes its live view).
    """
    if unavailable is None:
        unavailable = frozenset(n.id for n in topology.nodes if n.status is not Status.UP)
    node = topology.node(robot)
    if node.kind is not NodeKind.ROBOT:
        raise NotARobot(f"{node.name} is a {node.kind.value}, not a robot")
    if node.position is None:
        raise MissingPosition(f"robot {node.name} has no position")
    if range_m <= 0:
        raise ValueError("range must be positive")
    found = []
    for other in topology.robots:
        if other.id == node.id or other.position is None:
            continue
        if other.id in unavailable:
            continue
        d = math.dist(node.position, other.position)
        if d <= range_m:
            found.append((d, other.id))
    found.sort()
    return [i for _, i in found]


def interconnect(names: Sequence[str], shape: Shape) -> list[tuple[str, str]]:
    """Pairs of ``names`` to link for the requested shape."""
    shape = Shape(shape)
    if shape is Shape.BUS:
        return list(zip(names, names[1:]))
    if shape is Shape.STAR:
        return [(names[0], other) for other in names[1:]]
    if shape is Shape.MESH:
        return list(combinations(names, 2))
    if shape is Shape.TREE:
        return [(names[(i - 1) // 2], names[i]) for i in range(1, len(names))]
    raise ValueError(f"no generated links for shape {shape.value}")


def unavailable_from(statuses: Mapping[int, Status]) -> frozenset:
    return frozenset(i for i, s in statuses.items() if s is not Status.UP)
