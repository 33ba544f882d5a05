"""Brute-force latency oracle for unloaded requests.

Independent of the engine: it reads only the scenario's raw nodes, links,
positions and placement, runs its own shortest-path search and sums the
round trip of every escalation attempt in integer microseconds. Valid when
no request overlaps another (every server sees load 1, no queueing).
"""

import heapq
import math
from decimal import Decimal


def us(ms) -> int:
    return int((Decimal(str(ms)) * 1000).to_integral_value())


def _shortest(scenario, src, down):
    nodes = scenario.topology.nodes
    adj = {n.id: [] for n in nodes}
    for link in scenario.topology.links:
        adj[link.a].append((link.b, link.latency_us))
        adj[link.b].append((link.a, link.latency_us))
    dist = {src: 0}
    heap = [(0, src)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        # robots and downed nodes may terminate a path but never relay it
        if u != src and (nodes[u].kind.value == "robot" or u in down):
            continue
        for v, w in adj[u]:
            if v in down:
                continue
            if d + w < dist.get(v, math.inf):
                dist[v] = d + w
                heapq.heappush(heap, (d + w, v))
    return dist


def _holders(scenario):
    """node name -> set of key names held permanently."""
    all_keys = {k.name for k in scenario.keys}
    held = {}
    for name, keys in scenario.placement.items():
        held[name] = all_keys if "*" in keys else set(keys)
    cloud = [n for n in scenario.topology.nodes if n.kind.value == "cloud"]
    if scenario.cloud_universal and cloud:
        held[cloud[0].name] = all_keys
    return held


def _service(node) -> int:
    m = node.load_model
    return us(m.base_service_ms) if m is not None else 0


def candidates(scenario, origin, down=frozenset()):
    """Escalation targets ``(tier_label, node_id)`` in order."""
    topo = scenario.topology
    nodes = topo.nodes
    arch = scenario.architecture.value
    kinds = {(min(l.a, l.b), max(l.a, l.b)): l.kind.value for l in topo.links}

    def kind_between(a, b):
        return kinds.get((min(a, b), max(a, b)))

    cloud = next((n.id for n in nodes if n.kind.value == "cloud"), None)
    if arch == "CloudOnly":
        return [("cloud", cloud)]
    out = [("local", origin)]
    me = nodes[origin]
    if arch == "B" and me.position is not None:
        near = []
        for n in nodes:
            if n.id == origin or n.kind.value != "robot" or n.position is None or n.id in down:
                continue
            d = math.dist(me.position, n.position)
            if d <= scenario.d2d_range_m and kind_between(origin, n.id) == "d2d":
                near.append((d, n.id))
        out += [("d2d", i) for _, i in sorted(near)]
    server = next((n.id for n in nodes if n.kind.value in ("frs", "sfrs")
                   and kind_between(origin, n.id) == "access"), None)
    home = server
    if server is not None and nodes[server].kind.value == "sfrs":
        out.append(("sfrs", server))
        home = next((n.id for n in nodes if n.kind.value == "frs" and kind_between(server, n.id)), None)
    if home is not None:
        out.append(("frs", home))
    if arch == "C" and home is not None and home not in down:
        peers = sorted({n.id for n in nodes if n.kind.value == "frs"
                        and kind_between(home, n.id) == "interfrs"},
                       key=lambda p: (abs(p - home), p))
        out += [("peerfrs", p) for p in peers]
    if cloud is not None:
        out.append(("cloud", cloud))
    return out


def resolve(scenario, origin, key_name, down=frozenset()):
    """``(tier_label or None, latency_us)`` for one unloaded request."""
    nodes = scenario.topology.nodes
    held = _holders(scenario)
    dist = _shortest(scenario, origin, down)
    total = 0
    for tier, target in candidates(scenario, origin, down):
        if tier == "local":
            if key_name in held.get(nodes[origin].name, ()):
                return tier, us(scenario.exec_ms)
            continue
        if target in down or target not in dist:
            continue
        total += 2 * dist[target] + _service(nodes[target])
        if key_name in held.get(nodes[target].name, ()):
            return tier, total + us(scenario.exec_ms)
    return None, total
