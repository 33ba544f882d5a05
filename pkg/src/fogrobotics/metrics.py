"""Per-run latency, jitter, tier-hit and link-burden accounting.

Latencies are kept as integer microseconds so every aggregate can be
recomputed exactly from the per-request rows.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional

from ._time import fmt_ms
from .protocol import Resolution, Tier
from .topology import LinkKind

CSV_COLUMNS = (
    "scenario", "architecture", "profile", "n_robots", "n_frs", "seed", "requests", "failed",
    "mean_ms", "p50_ms", "p95_ms", "p99_ms", "jitter_ms",
    "tier_local", "tier_d2d", "tier_sfrs", "tier_frs", "tier_peerfrs", "tier_cloud",
    "fronthaul_bytes", "backhaul_bytes", "access_bytes", "d2d_bytes",
)
CSV_HEADER = ",".join(CSV_COLUMNS)


class DuplicateRequestId(ValueError):
    pass


class EmptyRun(ValueError):
    pass


class WorkloadMismatch(ValueError):
    pass


@dataclass(frozen=True)
class RequestRow:
    request_id: int
    robot: int
    tier: Optional[Tier]
    latency_us: int

    @property
    def latency_ms(self) -> float:
        return self.latency_us / 1000


def nearest_rank(sorted_values: list, pct: float):
    """Nearest-rank percentile of an ascending list."""
    n = len(sorted_values)
    rank = max(1, math.ceil(pct / 100 * n))
    return sorted_values[rank - 1]


def pstdev_us(values: list) -> float:
    """Population standard deviation, computed from exact integer moments."""
    n = len(values)
    s1 = sum(values)
    s2 = sum(v * v for v in values)
    return math.sqrt(n * s2 - s1 * s1) / n


@dataclass
class MetricsReport:
    per_request: list
    requests: int
    failed_count: int
    unfinished_count: int
    tier_counts: dict
    bytes_by_link_kind: dict
    summary_bytes_by_link_kind: dict
    mean_us: Optional[float] = None
    min_us: Optional[int] = None
    max_us: Optional[int] = None
    p50_us: Optional[int] = None
    p95_us: Optional[int] = None
    p99_us: Optional[int] = None
    jitter_us: Optional[float] = None
    scenario: str = ""
    architecture: str = ""
    profile: str = ""
    n_robots: int = 0
    n_frs: int = 0
    seed: int = 0
    workload_digest: str = ""

    @property
    def resolved_count(self) -> int:
        return sum(self.tier_counts.values())

    @property
    def mean_ms(self) -> Optional[float]:
        return None if self.mean_us is None else self.mean_us / 1000

    @property
    def jitter_ms(self) -> Optional[float]:
        return None if self.jitter_us is None else self.jitter_us / 1000

    def percentile_ms(self, which: str) -> Optional[float]:
        v = getattr(self, f"{which}_us")
        return None if v is None else v / 1000

    def request_bytes(self, kind: LinkKind) -> int:
        return self.bytes_by_link_kind.get(kind, 0) - self.summary_bytes_by_link_kind.get(kind, 0)

    @property
    def fronthaul_bytes(self) -> int:
        return self.bytes_by_link_kind.get(LinkKind.FRONTHAUL, 0)

    def csv_row(self) -> list:
        def ms(v):
            if v is None:
                return ""
            if isinstance(v, int):
                return fmt_ms(v)
            return f"{v / 1000:.3f}"

        b = self.bytes_by_link_kind
        return [
            self.scenario, self.architecture, self.profile, str(self.n_robots), str(self.n_frs),
            str(self.seed), str(self.requests), str(self.failed_count),
            ms(self.mean_us), ms(self.p50_us), ms(self.p95_us), ms(self.p99_us), ms(self.jitter_us),
            *(str(self.tier_counts.get(t, 0)) for t in Tier),
            *(str(b.get(k, 0)) for k in (LinkKind.FRONTHAUL, LinkKind.BACKHAUL,
                                         LinkKind.ACCESS, LinkKind.D2D)),
        ]

    def table(self) -> str:
        rows = [
            ("scenario", self.scenario),
            ("architecture", self.architecture),
            ("profile", self.profile),
            ("seed", self.seed),
            ("robots", self.n_robots),
            ("frs", self.n_frs),
            ("requests", self.requests),
            ("failed", self.failed_count),
            ("unfinished", self.unfinished_count),
            ("mean (ms)", _ms_text(self.mean_us)),
            ("p50 (ms)", _ms_text(self.p50_us)),
            ("p95 (ms)", _ms_text(self.p95_us)),
            ("p99 (ms)", _ms_text(self.p99_us)),
            ("jitter, stdev (ms)", _ms_text(self.jitter_us)),
        ]
        rows += [(f"tier {t.label}", self.tier_counts.get(t, 0)) for t in Tier]
        rows += [(f"{k.value} bytes", self.bytes_by_link_kind.get(k, 0)) for k in LinkKind]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows) + "\n"


def _ms_text(v) -> str:
    if v is None:
        return "-"
    return fmt_ms(v) if isinstance(v, int) else f"{v / 1000:.3f}"


class MetricsCollector:
    """Incremental accumulation of resolutions for one run."""

    def __init__(self):
        self.rows: list[RequestRow] = []
        self._ids: set[int] = set()
        self.issued = 0
        self.unfinished = 0
        self.failed = 0
        self.tier_counts = {t: 0 for t in Tier}
        self.bytes_by_kind = {k: 0 for k in LinkKind}

    def note_issued(self) -> None:
        self.issued += 1

    def note_unfinished(self) -> None:
        self.unfinished += 1

    def record(self, resolution: Resolution) -> None:
        rid = resolution.request.id
        if rid in self._ids:
            raise DuplicateRequestId(rid)
        self._ids.add(rid)
        self.rows.append(RequestRow(rid, resolution.request.origin, resolution.resolved_tier,
                                    resolution.total_us))
        for kind, nbytes in resolution.bytes_by_kind.items():
            self.bytes_by_kind[kind] += nbytes
        if resolution.failed:
            self.failed += 1
        else:
            self.tier_counts[resolution.resolved_tier] += 1

    def finalize(self, meta: Optional[dict] = None) -> MetricsReport:
        meta = dict(meta or {})
        if self.issued == 0 and not self.rows:
            raise EmptyRun("no requests were issued")
        summary = {k: v for k, v in meta.pop("summary_bytes", {}).items() if v}
        total = dict(self.bytes_by_kind)
        for kind, nbytes in summary.items():
            total[kind] = total.get(kind, 0) + nbytes
        report = MetricsReport(
            per_request=sorted(self.rows, key=lambda r: r.request_id),
            requests=max(self.issued, len(self.rows) + self.unfinished),
            failed_count=self.failed,
            unfinished_count=self.unfinished,
            tier_counts=dict(self.tier_counts),
            bytes_by_link_kind=total,
            summary_bytes_by_link_kind=summary,
            **meta,
        )
        fill_latency_stats(report)
        return report


def fill_latency_stats(report: MetricsReport) -> None:
    lat = sorted(r.latency_us for r in report.per_request if r.tier is not None)
    if not lat:
        return
    report.mean_us = sum(lat) / len(lat)
    report.min_us = lat[0]
    report.max_us = lat[-1]
    report.p50_us = nearest_rank(lat, 50)
    report.p95_us = nearest_rank(lat, 95)
    report.p99_us = nearest_rank(lat, 99)
    report.jitter_us = pstdev_us(lat)


@dataclass(frozen=True)
class Comparison:
    latency_ratio: float
    fronthaul_ratio: float
    fr_fronthaul_bytes: int
    cr_fronthaul_bytes: int
    fr_hit_rate: float

    @property
    def fronthaul_ok(self) -> bool:
        """FR may not put more bytes on the fronthaul than CR once it serves any hit locally."""
        return self.fr_hit_rate == 0 or self.fr_fronthaul_bytes <= self.cr_fronthaul_bytes


def _ratio(num, den) -> float:
    if den == 0:
        return 1.0 if num == 0 else math.inf
    return num / den


def compare(fr: MetricsReport, cr: MetricsReport) -> Comparison:
    """Cloud-over-fog ratios of mean latency and fronthaul bytes."""
    if fr.requests != cr.requests or fr.workload_digest != cr.workload_digest:
        raise WorkloadMismatch("reports come from different workloads")
    local = sum(fr.tier_counts.get(t, 0) for t in Tier if t is not Tier.CLOUD)
    hit_rate = local / fr.requests if fr.requests else 0.0
    return Comparison(
        latency_ratio=_ratio(cr.mean_us or 0, fr.mean_us or 0),
        fronthaul_ratio=_ratio(cr.fronthaul_bytes, fr.fronthaul_bytes),
        fr_fronthaul_bytes=fr.fronthaul_bytes,
        cr_fronthaul_bytes=cr.fronthaul_bytes,
        fr_hit_rate=hit_rate,
    )


def to_csv(reports: Iterable[MetricsReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        writer.writerow(r.csv_row())
    return buf.getvalue()


def per_request_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["request_id", "robot", "tier", "latency_ms"])
    for r in report.per_request:
        writer.writerow([r.request_id, r.robot, r.tier.label if r.tier is not None else "failed",
                         fmt_ms(r.latency_us)])
    return buf.getvalue()
