"""Reader for the declarative ``.scn`` scenario format.

A file is a header of ``key = value`` lines followed by whitespace-separated
tables. ``#`` starts a comment. Latencies are milliseconds, positions meters::

    name = arch_a
    architecture = A            # A | B | C | CloudOnly
    profile = default           # default | paper-fig3 | paper-fig4 | path.cal
    shape = star
    duration_ms = 10000
    mix = map:0.4, image:0.3, speech:0.2, mltask:0.1
    requesters = r0, r1         # or: all
    frs.capacity = 4            # any profile key overrides the profile

    [nodes]
    # name   kind       [at=x,y]   [status=up|down|compromised]
    cloud    cloud
    gw       gateway
    frs0     frs
    r0       robot      at=0,0

    [links]
    # a      b       kind        [latency_ms; default from the profile]
    gw       cloud   backhaul
    frs0     gw      fronthaul
    r0       frs0    access      3

    [keys]
    # name            class    bytes
    map/district      map      2000000

    [placement]
    # node   keys... (or * for all)
    frs0     *

    [failures]
    # node   at_ms   shutdown|compromise|recover
    frs0     500     shutdown

Other header keys: seed, request_period_ms, jitter_ms, d2d_range_m,
write_back, cache_ttl_ms, cloud_universal, catalog_capacity.<node>,
summaries, summary_size_bytes, summary_period_ms, summary_uses_capacity,
request_bytes, miss_bytes, strategy (round-trip | forward-chain), drain,
exec_ms.
"""

from __future__ import annotations

import shlex
from importlib import resources
from pathlib import Path
from typing import Optional

from .catalog import DataClass, DataKey
from .profiles import (
    ScenarioParseError, apply_pairs, is_profile_key, iter_pairs, load_profile, parse_bool,
)
from .protocol import Architecture, FailureMode, Strategy
from .scenarios import DELIVERY_KEYS, DELIVERY_MIX, FailureSpec, Scenario, Workload
from .topology import (
    LinkKind, LinkSpec, NodeKind, NodeSpec, Shape, Status, TopologyError, TopologySpec,
    build_topology,
)

SHIPPED = ("arch_a.scn", "arch_b.scn", "arch_c.scn")
SECTIONS = ("nodes", "links", "keys", "placement", "failures")

_ARCH_ALIASES = {"a": "A", "b": "B", "c": "C", "cloud": "CloudOnly", "cloudonly": "CloudOnly"}

_FLOAT_KEYS = {"duration_ms", "request_period_ms", "jitter_ms", "d2d_range_m", "cache_ttl_ms",
               "summary_period_ms", "exec_ms"}
_INT_KEYS = {"seed", "summary_size_bytes", "request_bytes", "miss_bytes"}
_BOOL_KEYS = {"write_back", "cloud_universal", "summaries", "summary_uses_capacity", "drain"}


def parse_architecture(text: str) -> Architecture:
    return Architecture(_ARCH_ALIASES.get(text.strip().lower(), text.strip()))


def parse_mix(text: str) -> tuple:
    mix = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        cls, _, weight = part.partition(":")
        mix.append((DataClass(cls.strip().lower()), float(weight) if weight else 1.0))
    if not mix:
        raise ValueError("empty mix")
    return tuple(mix)


def parse_scenario(text: str, source: str = "", profile=None) -> Scenario:
    """Parse scenario text. ``profile`` (name, path or Profile) replaces the file's own."""
    header: list[tuple[int, str, str]] = []
    tables: dict[str, list[tuple[int, list[str]]]] = {s: [] for s in SECTIONS}
    section: Optional[str] = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in tables:
                raise ScenarioParseError(f"unknown section [{section}]", no, source)
            continue
        if section is None:
            header.extend(iter_pairs([raw], source, start=no))
        else:
            try:
                tables[section].append((no, shlex.split(line)))
            except ValueError as exc:
                raise ScenarioParseError(str(exc), no, source) from None

    settings = {}
    profile_pairs = []
    lines = {}
    for no, key, value in header:
        lines[key] = no
        if key == "profile":
            settings["profile"] = value
        elif is_profile_key(key) and key not in ("duration_ms", "exec_ms", "drain",
                                                 "request_period_ms", "jitter_ms"):
            profile_pairs.append((no, key, value))
        else:
            settings[key] = (no, value)

    prof = load_profile(profile if profile is not None else settings.pop("profile", "default"))
    settings.pop("profile", None)
    prof = apply_pairs(prof, profile_pairs, source)

    def get(key, conv, default):
        if key not in settings:
            return default
        no, value = settings.pop(key)
        try:
            return conv(value)
        except (ValueError, KeyError) as exc:
            raise ScenarioParseError(f"bad value for {key}: {exc}", no, source) from None

    name = get("name", str, Path(source).stem or "scenario")
    architecture = get("architecture", parse_architecture, Architecture.A)
    shape = get("shape", lambda v: Shape(v.lower()), Shape.CUSTOM)
    kw = {}
    for key in _FLOAT_KEYS:
        default = {"duration_ms": prof.duration_ms, "request_period_ms": prof.request_period_ms,
                   "jitter_ms": prof.jitter_ms, "exec_ms": prof.exec_ms}.get(key)
        v = get(key, float, default)
        if v is not None:
            kw[key] = v
    for key in _INT_KEYS:
        v = get(key, int, None)
        if v is not None:
            kw[key] = v
    for key in _BOOL_KEYS:
        default = prof.drain if key == "drain" else None
        v = get(key, parse_bool, default)
        if v is not None:
            kw[key] = v
    mix = get("mix", parse_mix, DELIVERY_MIX)
    requesters = get("requesters", lambda v: None if v.strip().lower() == "all"
                     else tuple(p.strip() for p in v.split(",") if p.strip()), None)
    strategy = get("strategy", Strategy, Strategy.ROUND_TRIP)
    capacities = {}
    for key in [k for k in settings if k.startswith("catalog_capacity.")]:
        capacities[key.split(".", 1)[1]] = get(key, int, None)
    if settings:
        key, (no, _) = next(iter(settings.items()))
        raise ScenarioParseError(f"unknown key {key!r}", no, source)

    nodes = []
    node_names = set()
    for no, row in tables["nodes"]:
        if len(row) < 2:
            raise ScenarioParseError("node rows need: name kind", no, source)
        try:
            kind = NodeKind(row[1].lower())
            position = None
            status = Status.UP
            for opt in row[2:]:
                k, _, v = opt.partition("=")
                if k == "at":
                    x, y = (float(p) for p in v.split(","))
                    position = (x, y)
                elif k == "status":
                    status = Status(v.lower())
                else:
                    raise ValueError(f"unknown node option {opt!r}")
        except ValueError as exc:
            raise ScenarioParseError(str(exc), no, source) from None
        model = None
        if kind is NodeKind.ROBOT:
            model = prof.model("d2d")
        elif kind.is_server:
            model = prof.model(kind.value)
        nodes.append(NodeSpec(row[0], kind, status, model, position))
        node_names.add(row[0])

    links = []
    for no, row in tables["links"]:
        if len(row) not in (3, 4):
            raise ScenarioParseError("link rows need: a b kind [latency_ms]", no, source)
        for end in row[:2]:
            if end not in node_names:
                raise ScenarioParseError(f"link names unknown node {end!r}", no, source)
        try:
            kind = LinkKind(row[2].lower())
            latency = float(row[3]) if len(row) == 4 else prof.latency_ms[kind]
        except (ValueError, KeyError) as exc:
            raise ScenarioParseError(f"bad link: {exc}", no, source) from None
        links.append(LinkSpec(row[0], row[1], kind, latency))

    keys = []
    for no, row in tables["keys"]:
        try:
            keys.append(DataKey(row[0], int(row[2]), DataClass(row[1].lower())))
        except (ValueError, IndexError) as exc:
            raise ScenarioParseError(f"key rows need: name class bytes ({exc})", no, source) from None
    keys = tuple(keys) or DELIVERY_KEYS
    key_names = {k.name for k in keys}

    placement: dict[str, tuple[str, ...]] = {}
    for no, row in tables["placement"]:
        if row[0] not in node_names:
            raise ScenarioParseError(f"placement names unknown node {row[0]!r}", no, source)
        for k in row[1:]:
            if k != "*" and k not in key_names:
                raise ScenarioParseError(f"placement names unknown key {k!r}", no, source)
        placement[row[0]] = placement.get(row[0], ()) + tuple(row[1:])

    failures = []
    for no, row in tables["failures"]:
        try:
            if row[0] not in node_names:
                raise ValueError(f"unknown node {row[0]!r}")
            mode = FailureMode(row[2].lower()) if len(row) > 2 else FailureMode.SHUTDOWN
            failures.append(FailureSpec(row[0], float(row[1]), mode))
        except (ValueError, IndexError) as exc:
            raise ScenarioParseError(f"failure rows need: node at_ms [mode] ({exc})", no, source) from None

    try:
        topo = build_topology(TopologySpec(nodes, links, shape,
                                           require_cloud=any(n.kind is NodeKind.CLOUD for n in nodes)))
    except TopologyError as exc:
        raise ScenarioParseError(f"invalid topology: {exc}", None, source) from None

    workload = Workload(kw.pop("request_period_ms"), kw.pop("jitter_ms"), mix, requesters)
    try:
        return Scenario(
            name=name, topology=topo, architecture=architecture, keys=keys, placement=placement,
            workload=workload, profile_name=prof.name, failures=tuple(failures),
            catalog_capacity=capacities, strategy=strategy, **kw,
        )
    except ValueError as exc:
        raise ScenarioParseError(str(exc), None, source) from None


def shipped_path(name: str) -> Path:
    return Path(str(resources.files("fogrobotics") / "data" / name))


def load_scenario(ref, profile=None) -> Scenario:
    """Load a scenario file by path, or by the bare name of a shipped file."""
    path = Path(ref)
    if not path.exists():
        candidate = shipped_path(path.name if path.suffix else f"{path.name}.scn")
        if not candidate.exists():
            raise ScenarioParseError(f"no such scenario file: {ref}")
        path = candidate
    return parse_scenario(path.read_text(encoding="utf-8"), path.name, profile)
