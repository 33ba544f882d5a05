"""Parameter profiles: the analytic default and fitted calibration sets.

Profile files (``*.cal``) and scenario file headers share one line grammar::

    # comment
    key = value

Recognised profile keys::

    name, exec_ms, request_period_ms, jitter_ms, duration_ms, drain
    latency.<access|fronthaul|backhaul|d2d|interfrs>_ms
    <frs|sfrs|cloud|d2d>.<base_ms|increment_ms|capacity|hold_ms>

``capacity`` accepts ``unbounded``. A ``d2d.*`` model is carried by robots and
only applies when they answer device-to-device requests.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .engine import UNBOUNDED, ServerLoadModel
from .topology import LinkKind

DEFAULT_LATENCY_MS = {
    LinkKind.ACCESS: 3.0,
    LinkKind.FRONTHAUL: 4.0,
    LinkKind.BACKHAUL: 130.0,
    LinkKind.D2D: 2.0,
    LinkKind.INTER_FRS: 1.0,
}

MODEL_ROLES = ("frs", "sfrs", "cloud", "d2d")
_MODEL_FIELDS = {
    "base_ms": "base_service_ms",
    "increment_ms": "per_load_increment_ms",
    "capacity": "concurrency_capacity",
    "hold_ms": "hold_ms",
}
PROFILE_FILES = {"paper-fig3": "paper_fig3.cal", "paper-fig4": "paper_fig4.cal"}
PROFILE_NAMES = ("default", *PROFILE_FILES)


class ScenarioParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, source: str = ""):
        self.line = line
        self.source = source
        where = f"{source}:" if source else ""
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(where + message)


@dataclass(frozen=True)
class Profile:
    name: str = "default"
    exec_ms: float = 3.0
    latency_ms: Mapping[LinkKind, float] = field(default_factory=lambda: dict(DEFAULT_LATENCY_MS))
    models: Mapping[str, Optional[ServerLoadModel]] = field(default_factory=lambda: {
        "frs": ServerLoadModel(), "sfrs": ServerLoadModel(), "cloud": ServerLoadModel(), "d2d": None,
    })
    request_period_ms: float = 100.0
    jitter_ms: float = 0.0
    duration_ms: float = 10_000.0
    drain: bool = True

    def model(self, role: str) -> Optional[ServerLoadModel]:
        return self.models.get(role)


DEFAULT = Profile()


def parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def iter_pairs(lines: Iterable[str], source: str = "", start: int = 1):
    """Yield ``(line_no, key, value)`` for each ``key = value`` line."""
    for no, raw in enumerate(lines, start):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioParseError(f"expected 'key = value', got {line!r}", no, source)
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ScenarioParseError("empty key", no, source)
        yield no, key, value


def is_profile_key(key: str) -> bool:
    head = key.split(".", 1)[0]
    return key in ("exec_ms", "request_period_ms", "jitter_ms", "duration_ms", "drain") \
        or head in MODEL_ROLES or head == "latency"


def apply_pairs(profile: Profile, pairs, source: str = "") -> Profile:
    """New profile with ``(line, key, value)`` overrides applied."""
    latency = dict(profile.latency_ms)
    models = dict(profile.models)
    changes = {}
    for no, key, value in pairs:
        try:
            if key == "name":
                changes["name"] = value
            elif key in ("exec_ms", "request_period_ms", "jitter_ms", "duration_ms"):
                changes[key] = float(value)
            elif key == "drain":
                changes["drain"] = parse_bool(value)
            elif key.startswith("latency."):
                kind = key[len("latency."):].removesuffix("_ms")
                latency[LinkKind(kind)] = float(value)
            elif key.split(".", 1)[0] in MODEL_ROLES and "." in key:
                role, attr = key.split(".", 1)
                if attr not in _MODEL_FIELDS:
                    raise KeyError(key)
                if attr == "capacity":
                    parsed = UNBOUNDED if value.lower() == "unbounded" else int(value)
                else:
                    parsed = float(value)
                base = models.get(role) or ServerLoadModel()
                models[role] = dataclasses.replace(base, **{_MODEL_FIELDS[attr]: parsed})
            else:
                raise KeyError(key)
        except KeyError:
            raise ScenarioParseError(f"unknown profile key {key!r}", no, source) from None
        except ValueError as exc:
            raise ScenarioParseError(f"bad value for {key}: {exc}", no, source) from None
    return dataclasses.replace(profile, latency_ms=latency, models=models, **changes)


def parse_profile(text: str, source: str = "") -> Profile:
    return apply_pairs(DEFAULT, iter_pairs(text.splitlines(), source), source)


def data_path(filename: str) -> Path:
    return Path(str(resources.files("fogrobotics") / "data" / filename))


def load_profile(ref) -> Profile:
    """Profile by name (``default``, ``paper-fig3``, ``paper-fig4``) or .cal path."""
    if isinstance(ref, Profile):
        return ref
    if ref in (None, "", "default", "DefaultAnalytic"):
        return DEFAULT
    aliases = {"PaperFig3": "paper-fig3", "PaperFig4": "paper-fig4",
               "paper_fig3": "paper-fig3", "paper_fig4": "paper-fig4"}
    ref = aliases.get(ref, ref)
    if ref in PROFILE_FILES:
        path = data_path(PROFILE_FILES[ref])
    else:
        path = Path(ref)
        if not path.exists():
            raise ScenarioParseError(f"unknown profile {ref!r} (known: {', '.join(PROFILE_NAMES)})")
    return parse_profile(path.read_text(encoding="utf-8"), str(path.name))


def format_profile(profile: Profile, header: str = "") -> str:
    """Serialise a profile in the .cal grammar (inverse of :func:`parse_profile`)."""
    out = [f"# {line}" if line else "#" for line in header.splitlines()]
    out.append(f"name = {profile.name}")
    out.append(f"exec_ms = {_num(profile.exec_ms)}")
    for kind in LinkKind:
        if kind in profile.latency_ms:
            out.append(f"latency.{kind.value}_ms = {_num(profile.latency_ms[kind])}")
    for role in MODEL_ROLES:
        m = profile.models.get(role)
        if m is None:
            continue
        cap = "unbounded" if m.concurrency_capacity == UNBOUNDED else str(m.concurrency_capacity)
        out.append(f"{role}.base_ms = {_num(m.base_service_ms)}")
        out.append(f"{role}.increment_ms = {_num(m.per_load_increment_ms)}")
        out.append(f"{role}.capacity = {cap}")
        out.append(f"{role}.hold_ms = {_num(m.hold_ms)}")
    out.append(f"request_period_ms = {_num(profile.request_period_ms)}")
    out.append(f"jitter_ms = {_num(profile.jitter_ms)}")
    out.append(f"duration_ms = {_num(profile.duration_ms)}")
    out.append(f"drain = {'true' if profile.drain else 'false'}")
    return "\n".join(out) + "\n"


def _num(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".") if x != int(x) else str(int(x))
