"""Simulation time is integer microseconds; public interfaces speak milliseconds."""

from decimal import ROUND_HALF_EVEN, Decimal

US_PER_MS = 1000


def to_us(ms) -> int:
    # str() first so 2.91 becomes 2910 and not 2909.9999...
    value = Decimal(str(ms)) * US_PER_MS
    return int(value.quantize(Decimal(1), rounding=ROUND_HALF_EVEN))


def to_ms(us: int) -> float:
    return us / US_PER_MS


def fmt_ms(us: int) -> str:
    """Exact decimal rendering of a microsecond count in milliseconds."""
    sign = "-" if us < 0 else ""
    whole, frac = divmod(abs(us), US_PER_MS)
    return f"{sign}{whole}.{frac:03d}"
