"""Per-node data residency: permanent holdings plus TTL-bounded cached copies."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional


class DataClass(str, Enum):
    MAP = "map"
    IMAGE = "image"
    SPEECH = "speech"
    ML_TASK = "mltask"
    OTHER = "other"


@dataclass(frozen=True)
class DataKey:
    name: str
    payload_size: int
    data_class: DataClass = DataClass.OTHER

    def __post_init__(self):
        if self.payload_size <= 0:
            raise ValueError(f"payload_size of {self.name!r} must be > 0")


class Residency(str, Enum):
    PERMANENT = "permanent"
    TRANSIENT = "transient"


@dataclass(frozen=True)
class CatalogEntry:
    key: DataKey
    residency: Residency
    expires_at: Optional[int] = None   # microseconds, transient only

    def live(self, now: int) -> bool:
        return self.residency is Residency.PERMANENT or self.expires_at > now


class CapacityFullOfPermanents(Exception):
    pass


class Catalog:
    """Resident keys at one node.

    Times are integer microseconds (the engine's clock).
    """

    def __init__(self, owner: int, capacity: Optional[int] = None,
                 permanent: Iterable[DataKey] = ()):
        if capacity is not None and capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.owner = owner
        self.capacity = capacity
        self.entries: dict[str, CatalogEntry] = {}
        for key in permanent:
            self.add_permanent(key)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, name):
        return name in self.entries

    def add_permanent(self, key: DataKey) -> None:
        if key.name not in self.entries and self.capacity is not None and len(self) >= self.capacity:
            self._evict_one()
        self.entries[key.name] = CatalogEntry(key, Residency.PERMANENT)

    def lookup(self, key, now: int) -> bool:
        entry = self.entries.get(getattr(key, "name", key))
        return entry is not None and entry.live(now)

    def cache_insert(self, key: DataKey, now: int, ttl: int) -> "Catalog":
        """Hold ``key`` transiently until ``now + ttl``.

        When the catalog is full, the transient entry expiring first goes.
        A permanent holding of the same key is left as is.
        """
        if ttl <= 0:
            raise ValueError("ttl must be > 0")
        current = self.entries.get(key.name)
        if current is not None and current.residency is Residency.PERMANENT:
            return self
        if current is None and self.capacity is not None and len(self) >= self.capacity:
            self._evict_one()
        self.entries[key.name] = CatalogEntry(key, Residency.TRANSIENT, now + ttl)
        return self

    def _evict_one(self) -> None:
        transients = [e for e in self.entries.values() if e.residency is Residency.TRANSIENT]
        if not transients:
            raise CapacityFullOfPermanents(f"catalog of node {self.owner} is full of permanent entries")
        victim = min(transients, key=lambda e: (e.expires_at, e.key.name))
        del self.entries[victim.key.name]

    def evict_expired(self, now: int) -> int:
        gone = [name for name, e in self.entries.items()
                if e.residency is Residency.TRANSIENT and e.expires_at <= now]
        for name in gone:
            del self.entries[name]
        return len(gone)

    def copy(self) -> "Catalog":
        other = Catalog(self.owner, self.capacity)
        other.entries = dict(self.entries)
        return other


@dataclass(frozen=True)
class SummaryEvent:
    """One periodic upstream data summary from an FRS."""

    frs: int
    time: int
    size: int
    delivered: bool
    links: tuple[int, ...] = ()
