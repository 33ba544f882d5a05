"""Post-run traffic statistics and SFRS deployment advice."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .engine import EventKind, TraceRecord
from .topology import NodeKind, Topology


@dataclass(frozen=True)
class ServerStats:
    peak_load: int = 0
    mean_load: float = 0.0
    queue_wait_us: int = 0
    requests: int = 0

    @property
    def queue_wait_ms(self) -> float:
        return self.queue_wait_us / 1000


@dataclass(frozen=True)
class TrafficStats:
    servers: Mapping[int, ServerStats] = field(default_factory=dict)
    window_us: tuple = (0, 0)

    @property
    def window_ms(self) -> tuple:
        return (self.window_us[0] / 1000, self.window_us[1] / 1000)

    def peak(self, node: int) -> int:
        s = self.servers.get(node)
        return s.peak_load if s else 0


def collect_stats(trace: Iterable[TraceRecord], servers: Iterable[int] = ()) -> TrafficStats:
    """Per-server load figures replayed from an event trace.

    Load is in-service plus queued, sampled after every event on that server.
    The mean is time-weighted over the trace window. ``servers`` lists nodes
    to report even when the trace never touches them.
    """
    trace = list(trace)
    if not trace:
        return TrafficStats({n: ServerStats() for n in servers}, (0, 0))
    start, end = 0, max(r.time for r in trace)
    peak: dict[int, int] = {n: 0 for n in servers}
    area: dict[int, int] = {n: 0 for n in servers}
    last: dict[int, tuple] = {}
    wait: dict[int, int] = {n: 0 for n in servers}
    count: dict[int, int] = {n: 0 for n in servers}
    for r in trace:
        if r.node is None or r.in_service is None:
            continue
        n = r.node
        load = r.in_service + (r.queued or 0)
        if n in last:
            t0, l0 = last[n]
            area[n] = area.get(n, 0) + l0 * (r.time - t0)
        last[n] = (r.time, load)
        peak[n] = max(peak.get(n, 0), load)
        if r.kind is EventKind.SERVICE_COMPLETE:
            wait[n] = wait.get(n, 0) + (r.wait_us or 0)
            if r.request is not None:
                count[n] = count.get(n, 0) + 1
    for n, (t0, l0) in last.items():
        area[n] = area.get(n, 0) + l0 * (end - t0)
    span = end - start
    stats = {
        n: ServerStats(peak[n], area.get(n, 0) / span if span else 0.0,
                       wait.get(n, 0), count.get(n, 0))
        for n in sorted(peak)
    }
    return TrafficStats(stats, (start, end))


def frs_capacities(topology: Topology) -> dict:
    """Capacity map of every FRS that carries a load model."""
    return {n.id: n.load_model.concurrency_capacity
            for n in topology.of_kind(NodeKind.FRS) if n.load_model is not None}


def recommend_sfrs(stats: TrafficStats, capacities: Mapping[int, int],
                   utilization_threshold: float = 1.0) -> list:
    """``(frs, count)`` for each FRS whose peak load exceeds threshold x capacity.

    The count is ``ceil(peak / capacity) - 1`` and at least 1 once flagged, so a
    threshold below 1.0 never flags a server and then recommends nothing.
    """
    if not 0 < utilization_threshold <= 1:
        raise ValueError("utilization_threshold must be in (0, 1]")
    out = []
    for node in sorted(capacities):
        cap = capacities[node]
        peak = stats.peak(node)
        if peak > utilization_threshold * cap:
            out.append((node, max(math.ceil(peak / cap) - 1, 1)))
    return out


def advice_rows(stats: TrafficStats, capacities: Mapping[int, int], topology: Optional[Topology] = None,
                utilization_threshold: float = 1.0) -> list:
    """Rows ``(frs, peak, capacity, mean_load, queue_wait_ms, requests, recommended)``."""
    rec = dict(recommend_sfrs(stats, capacities, utilization_threshold))
    rows = []
    for node in sorted(capacities):
        s = stats.servers.get(node, ServerStats())
        name = topology.nodes[node].name if topology is not None else str(node)
        rows.append((name, s.peak_load, capacities[node], round(s.mean_load, 4),
                     s.queue_wait_ms, s.requests, rec.get(node, 0)))
    return rows
