"""Deterministic discrete-event engine with a capacity-limited server model.

Events are ordered by ``(time, sequence)``; the sequence number is handed
out at scheduling time, so equal-time events run in scheduling order. The
clock is an integer count of microseconds.
"""

from __future__ import annotations

import heapq
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Optional

from ._time import fmt_ms, to_ms, to_us
from .catalog import CapacityFullOfPermanents, SummaryEvent
from .metrics import MetricsCollector, MetricsReport
from .protocol import (
    Architecture, Attempt, Hop, OriginDown, Request, Resolution, Strategy, Tier, plan,
)
from .topology import NodeKind, Status, Topology

if TYPE_CHECKING:
    from .scenarios import Scenario

log = logging.getLogger(__name__)

UNBOUNDED = 2**31 - 1


@dataclass(frozen=True)
class ServerLoadModel:
    """Service time grows linearly with concurrent load up to a capacity.

    Requests beyond ``concurrency_capacity`` wait in a FIFO queue. After a
    response leaves, the slot stays occupied for ``hold_ms`` more (session
    upkeep); the default of zero frees it immediately.
    """

    base_service_ms: float = 0.0
    per_load_increment_ms: float = 0.0
    concurrency_capacity: int = UNBOUNDED
    hold_ms: float = 0.0

    def __post_init__(self):
        if self.base_service_ms < 0 or self.per_load_increment_ms < 0 or self.hold_ms < 0:
            raise ValueError("service parameters must be >= 0")
        if int(self.concurrency_capacity) != self.concurrency_capacity or self.concurrency_capacity < 1:
            raise ValueError("concurrency_capacity must be an integer >= 1")

    @property
    def base_us(self) -> int:
        return to_us(self.base_service_ms)

    @property
    def increment_us(self) -> int:
        return to_us(self.per_load_increment_ms)

    @property
    def hold_us(self) -> int:
        return to_us(self.hold_ms)


def service_time_us(model: ServerLoadModel, inflight: int) -> int:
    if inflight < 1:
        raise ValueError("inflight must be >= 1")
    return model.base_us + model.increment_us * (inflight - 1)


def service_time(model: ServerLoadModel, inflight: int) -> float:
    """Milliseconds of service for a request admitted as the ``inflight``-th occupant."""
    return to_ms(service_time_us(model, inflight))


class EventKind(str, Enum):
    ISSUE_REQUEST = "IssueRequest"
    ARRIVE_AT_NODE = "ArriveAtNode"
    SERVICE_COMPLETE = "ServiceComplete"
    SLOT_RELEASE = "SlotRelease"
    STATUS_CHANGE = "StatusChange"
    SUMMARY = "Summary"
    END_OF_RUN = "EndOfRun"


@dataclass
class Event:
    time: int
    sequence: int
    kind: EventKind
    node: Optional[int] = None
    request: Any = None
    payload: Any = None


@dataclass(frozen=True)
class TraceRecord:
    time: int
    sequence: int
    kind: EventKind
    node: Optional[int]
    request: Optional[int]
    in_service: Optional[int] = None
    queued: Optional[int] = None
    wait_us: Optional[int] = None


class SchedulingInPast(ValueError):
    pass


class ServerDown(Exception):
    pass


class Scheduler:
    """Event list plus clock."""

    def __init__(self):
        self.now = 0
        self._seq = 0
        self._heap: list = []

    def __len__(self):
        return len(self._heap)

    def schedule(self, time: int, kind: EventKind, node=None, request=None, payload=None) -> Event:
        if time < self.now:
            raise SchedulingInPast(f"{kind.value} at {fmt_ms(time)} ms < now {fmt_ms(self.now)} ms")
        event = Event(time, self._seq, kind, node, request, payload)
        self._seq += 1
        heapq.heappush(self._heap, (time, event.sequence, event))
        return event

    def peek_time(self) -> Optional[int]:
        return self._heap[0][0] if self._heap else None

    def pop(self) -> Event:
        time, _, event = heapq.heappop(self._heap)
        self.now = time
        return event


@dataclass
class _Job:
    key: Any            # request id, or ("summary", frs, time)
    arrived: int
    flight: Any = None
    wait_us: int = 0
    service_us: int = 0


@dataclass
class ServerState:
    model: ServerLoadModel
    occupied: int = 0
    queue: deque = field(default_factory=deque)
    arrivals: list = field(default_factory=list)
    admissions: list = field(default_factory=list)
    max_occupied: int = 0

    @property
    def load(self) -> int:
        return self.occupied + len(self.queue)


class _Flight:
    __slots__ = ("request", "steps", "index", "at", "step", "hit", "resolution", "out_path")

    def __init__(self, request: Request, steps, resolution: Resolution):
        self.request = request
        self.steps = steps
        self.index = 0
        self.at = request.origin
        self.step = None
        self.hit = False
        self.resolution = resolution
        self.out_path = ()


@dataclass
class RunResult:
    scenario: Any
    report: MetricsReport
    resolutions: list
    trace: list
    summaries: list
    unfinished: list
    simulation: "Simulation"

    def trace_text(self) -> str:
        return self.simulation.trace_text()


class Simulation:
    """One run of a scenario. Single-threaded; build a new one per run."""

    def __init__(self, scenario: "Scenario", record_trace: bool = True):
        self.scenario = scenario
        self.topology: Topology = scenario.topology
        self.clock = Scheduler()
        self.status = {n.id: n.status for n in self.topology.nodes}
        self._unavailable = self._compute_unavailable()
        self.catalogs = scenario.initial_catalogs()
        self.servers = {
            n.id: ServerState(n.load_model) for n in self.topology.nodes if n.load_model is not None
        }
        self.record_trace = record_trace
        self.trace: list[TraceRecord] = []
        self.resolutions: list[Resolution] = []
        self.summaries: list[SummaryEvent] = []
        self.metrics = MetricsCollector()
        self._inflight: dict[int, _Flight] = {}
        self._stopped = False
        self._issued = 0
        self._bytes_summary: dict = {}

    # -- scheduling -----------------------------------------------------

    def schedule(self, time: int, kind: EventKind, node=None, request=None, payload=None) -> Event:
        return self.clock.schedule(time, kind, node, request, payload)

    @property
    def now(self) -> int:
        return self.clock.now

    def _compute_unavailable(self) -> frozenset:
        return frozenset(i for i, s in self.status.items() if s is not Status.UP)

    def is_up(self, node: int) -> bool:
        return self.status[node] is Status.UP

    def setup(self) -> None:
        sc = self.scenario
        end = to_us(sc.duration_ms)
        for change in sc.status_changes():
            self.schedule(change.at, EventKind.STATUS_CHANGE, change.node, payload=change.status)
        for req in sc.requests():
            self.schedule(req.issued_at, EventKind.ISSUE_REQUEST, req.origin, req)
        if sc.summaries and sc.architecture is not Architecture.CLOUD_ONLY:
            for frs in self.topology.of_kind(NodeKind.FRS):
                self.schedule(0, EventKind.SUMMARY, frs.id)
        self.schedule(end, EventKind.END_OF_RUN)

    def run_until(self, t_end) -> list[TraceRecord]:
        """Process events up to and including ``t_end`` (microseconds)."""
        if t_end < self.now:
            raise SchedulingInPast("t_end is before the current time")
        start = len(self.trace)
        while not self._stopped:
            head = self.clock.peek_time()
            if head is None or head > t_end:
                break
            self._dispatch(self.clock.pop())
        return self.trace[start:]

    def run(self) -> RunResult:
        self.setup()
        self.run_until(math.inf)
        unfinished = sorted(self._inflight)
        for _ in unfinished:
            self.metrics.note_unfinished()
        report = self.metrics.finalize(self._report_meta())
        return RunResult(self.scenario, report, self.resolutions, self.trace,
                         self.summaries, unfinished, self)

    def _report_meta(self) -> dict:
        sc = self.scenario
        return {
            "scenario": sc.name,
            "architecture": sc.architecture.value,
            "profile": sc.profile_name,
            "n_robots": len(sc.requesters()),
            "n_frs": len(self.topology.of_kind(NodeKind.FRS)),
            "seed": sc.seed,
            "workload_digest": sc.workload_digest(),
            "summary_bytes": dict(self._bytes_summary),
        }

    # -- dispatch -------------------------------------------------------

    def _dispatch(self, event: Event) -> None:
        kind = event.kind
        if kind is EventKind.ISSUE_REQUEST:
            self._on_issue(event)
        elif kind is EventKind.ARRIVE_AT_NODE:
            self._on_arrive(event)
        elif kind is EventKind.SERVICE_COMPLETE:
            self._on_service_complete(event)
        elif kind is EventKind.SLOT_RELEASE:
            self._release(event.node, event.time)
        elif kind is EventKind.STATUS_CHANGE:
            self._on_status(event)
        elif kind is EventKind.SUMMARY:
            self._on_summary(event)
        elif kind is EventKind.END_OF_RUN:
            if not self.scenario.drain:
                self._stopped = True
        if self.record_trace:
            self._trace(event)

    def _trace(self, event: Event) -> None:
        req = event.request
        if isinstance(req, _Flight):
            req = req.request.id
        elif isinstance(req, Request):
            req = req.id
        elif isinstance(req, _Job):
            req = req.key if isinstance(req.key, int) else None
        st = self.servers.get(event.node) if event.node is not None else None
        wait = None
        if event.kind is EventKind.SERVICE_COMPLETE:
            wait = event.request.wait_us
        self.trace.append(TraceRecord(
            event.time, event.sequence, event.kind, event.node, req,
            st.occupied if st else None, len(st.queue) if st else None, wait,
        ))

    def trace_text(self) -> str:
        names = [n.name for n in self.topology.nodes]
        lines = []
        for r in self.trace:
            node = names[r.node] if r.node is not None else "-"
            req = "-" if r.request is None else str(r.request)
            line = f"{fmt_ms(r.time)} {r.sequence} {r.kind.value} {node} {req}"
            if r.in_service is not None:
                line += f" load={r.in_service}+{r.queued}"
            lines.append(line)
        return "\n".join(lines) + ("\n" if lines else "")

    # -- requests -------------------------------------------------------

    def _on_issue(self, event: Event) -> None:
        req: Request = event.request
        self._issued += 1
        self.metrics.note_issued()
        res = Resolution(req, None)
        try:
            p = plan(req, self.topology, self.scenario.architecture,
                     self.scenario.d2d_range_m, self._unavailable)
        except OriginDown:
            self._finish(res, event.time, failed=True)
            return
        flight = _Flight(req, p.steps, res)
        self._inflight[req.id] = flight
        if flight.steps and flight.steps[0].tier is Tier.LOCAL_CACHE:
            hit = self.catalogs[req.origin].lookup(req.key, event.time)
            res.attempts.append(Attempt(Tier.LOCAL_CACHE, req.origin, hit))
            flight.index = 1
            if hit:
                flight.step = flight.steps[0]
                self._deliver(flight, event.time)
                return
        self._advance(flight, event.time)

    def _advance(self, flight: _Flight, now: int) -> None:
        topo = self.topology
        while flight.index < len(flight.steps):
            step = flight.steps[flight.index]
            flight.index += 1
            if step.target in self._unavailable:
                continue
            path = topo.path(flight.at, step.target, self._unavailable)
            if path is None:
                continue
            flight.step = step
            flight.out_path = path
            arrival = self._traverse(flight, flight.at, path, self.scenario.request_bytes, now)
            self.schedule(arrival, EventKind.ARRIVE_AT_NODE, step.target, flight, "out")
            return
        if flight.at != flight.request.origin:
            # forward chain exhausted away from the robot: the failure notice travels back
            path = topo.path(flight.at, flight.request.origin, self._unavailable)
            if path is not None:
                arrival = self._traverse(flight, flight.at, path, self.scenario.miss_bytes, now)
                flight.at = flight.request.origin
                self.schedule(arrival, EventKind.ARRIVE_AT_NODE, flight.request.origin, flight, "fail")
                return
        self._finish(flight.resolution, now, failed=True)

    def _traverse(self, flight: _Flight, src: int, path, nbytes: int, now: int) -> int:
        topo = self.topology
        res = flight.resolution
        cur = src
        t = now
        for link_id in path:
            link = topo.links[link_id]
            nxt = link.other(cur)
            res.hops.append(Hop(link_id, cur, nxt, link.latency_us, nbytes))
            res.bytes_by_kind[link.kind] = res.bytes_by_kind.get(link.kind, 0) + nbytes
            t += link.latency_us
            cur = nxt
        return t

    def _on_arrive(self, event: Event) -> None:
        flight: _Flight = event.request
        now = event.time
        if event.payload == "out":
            target = event.node
            if target in self._unavailable:
                self._respond(flight, now, False, 0, 0)
                return
            if target in self.servers:
                self.enqueue_service(target, _Job(flight.request.id, now, flight), now)
                return
            hit = self.catalogs[target].lookup(flight.request.key, now)
            self._respond(flight, now, hit, 0, 0)
        elif event.payload == "back":
            if flight.hit:
                self._deliver(flight, now)
            else:
                self._advance(flight, now)
        else:  # "fail"
            self._finish(flight.resolution, now, failed=True)

    def _respond(self, flight: _Flight, now: int, hit: bool, wait: int, service: int) -> None:
        step = flight.step
        flight.resolution.attempts.append(Attempt(step.tier, step.target, hit, wait, service))
        flight.hit = hit
        sc = self.scenario
        nbytes = flight.request.key.payload_size if hit else sc.miss_bytes
        if sc.strategy is Strategy.ROUND_TRIP:
            back = tuple(reversed(flight.out_path))
            arrival = self._traverse(flight, step.target, back, nbytes, now)
            flight.at = flight.request.origin
            self.schedule(arrival, EventKind.ARRIVE_AT_NODE, flight.request.origin, flight, "back")
            return
        if not hit:
            flight.at = step.target
            self._advance(flight, now)
            return
        back = self.topology.path(step.target, flight.request.origin, self._unavailable)
        if back is None:
            self._finish(flight.resolution, now, failed=True)
            return
        arrival = self._traverse(flight, step.target, back, nbytes, now)
        flight.at = flight.request.origin
        self.schedule(arrival, EventKind.ARRIVE_AT_NODE, flight.request.origin, flight, "back")

    def _deliver(self, flight: _Flight, now: int) -> None:
        sc = self.scenario
        res = flight.resolution
        res.resolved_tier = flight.step.tier
        res.exec_us = to_us(sc.exec_ms)
        if sc.write_back and res.resolved_tier in (Tier.CLOUD, Tier.PEER_FRS):
            home = self.topology.home_frs(flight.request.origin)
            if home is not None and self.is_up(home):
                try:
                    self.catalogs[home].cache_insert(flight.request.key, now, to_us(sc.cache_ttl_ms))
                except CapacityFullOfPermanents:
                    log.info("write-back skipped at %s: catalog full of permanents",
                             self.topology.nodes[home].name)
        self._finish(res, now + res.exec_us, failed=False)

    def _finish(self, res: Resolution, completed_at: int, failed: bool) -> None:
        if failed:
            res.resolved_tier = None
            res.exec_us = 0
        res.completed_at = completed_at
        res.total_us = completed_at - res.request.issued_at
        self._inflight.pop(res.request.id, None)
        self.resolutions.append(res)
        self.metrics.record(res)

    # -- servers --------------------------------------------------------

    def enqueue_service(self, server: int, job: _Job, now: int) -> None:
        if server in self._unavailable:
            raise ServerDown(self.topology.nodes[server].name)
        st = self.servers[server]
        st.arrivals.append(job.key)
        if st.occupied < st.model.concurrency_capacity:
            self._admit(server, job, now)
        else:
            st.queue.append(job)

    def _admit(self, server: int, job: _Job, now: int) -> None:
        st = self.servers[server]
        st.occupied += 1
        st.max_occupied = max(st.max_occupied, st.occupied)
        st.admissions.append(job.key)
        job.wait_us = now - job.arrived
        job.service_us = service_time_us(st.model, st.occupied)
        self.schedule(now + job.service_us, EventKind.SERVICE_COMPLETE, server, job)

    def _on_service_complete(self, event: Event) -> None:
        server = event.node
        job: _Job = event.request
        now = event.time
        if job.flight is not None:
            flight = job.flight
            hit = self.is_up(server) and self.catalogs[server].lookup(flight.request.key, now)
            self._respond(flight, now, hit, job.wait_us, job.service_us)
        hold = self.servers[server].model.hold_us
        if hold:
            self.schedule(now + hold, EventKind.SLOT_RELEASE, server)
        else:
            self._release(server, now)

    def _release(self, server: int, now: int) -> None:
        st = self.servers[server]
        st.occupied -= 1
        if st.queue and self.is_up(server):
            self._admit(server, st.queue.popleft(), now)

    def _on_status(self, event: Event) -> None:
        node, status = event.node, event.payload
        self.status[node] = status
        self._unavailable = self._compute_unavailable()
        st = self.servers.get(node)
        if st is None:
            return
        if status is not Status.UP:
            while st.queue:
                job = st.queue.popleft()
                if job.flight is not None:
                    self._respond(job.flight, event.time, False, event.time - job.arrived, 0)
        else:
            while st.queue and st.occupied < st.model.concurrency_capacity:
                self._admit(node, st.queue.popleft(), event.time)

    # -- summaries ------------------------------------------------------

    def _on_summary(self, event: Event) -> None:
        sc = self.scenario
        frs, now = event.node, event.time
        cloud = self.topology.cloud
        path = None
        if cloud is not None and self.is_up(frs):
            path = self.topology.path(frs, cloud.id, self._unavailable)
        if path is None:
            log.debug("summary from %s at %s ms skipped: cloud unreachable",
                      self.topology.nodes[frs].name, fmt_ms(now))
            self.summaries.append(SummaryEvent(frs, now, sc.summary_size_bytes, False))
        else:
            for link_id in path:
                kind = self.topology.links[link_id].kind
                self._bytes_summary[kind] = self._bytes_summary.get(kind, 0) + sc.summary_size_bytes
            self.summaries.append(SummaryEvent(frs, now, sc.summary_size_bytes, True, path))
            if sc.summary_uses_capacity and frs in self.servers:
                self.enqueue_service(frs, _Job(("summary", frs, now), now), now)
        nxt = now + to_us(sc.summary_period_ms)
        if nxt < to_us(sc.duration_ms):
            self.schedule(nxt, EventKind.SUMMARY, frs)


def simulate(scenario: "Scenario", record_trace: bool = True) -> RunResult:
    return Simulation(scenario, record_trace).run()
