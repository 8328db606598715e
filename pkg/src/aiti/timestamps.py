"""Millisecond-precision UTC timestamps and their two wire spellings.

Canonical form is RFC 3339 UTC with a trailing Z and exactly three fractional
digits.  The compat form is the zone-less second-precision spelling found in
older exported intel ("2022-08-11T23:39:03"); it is interpreted as UTC and the
fractional part is emitted only when nonzero.
"""

import re
from datetime import datetime, timezone

_TS_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})[Tt](\d{2}):(\d{2}):(\d{2})(?:\.(\d{1,9}))?"
    r"(?:[Zz]|\+00:00)?$"
)


def parse_timestamp(text: str) -> datetime:
    """Parse canonical or compat spellings into an aware UTC datetime.

    Sub-millisecond digits are truncated; a missing zone designator means UTC.
    """
    if not isinstance(text, str):
        raise ValueError(f"timestamp must be a string, got {type(text).__name__}")
    m = _TS_RE.match(text.strip())
    if not m:
        raise ValueError(f"unparseable timestamp {text!r}")
    year, month, day, hour, minute, second = (int(g) for g in m.groups()[:6])
    frac = m.group(7) or ""
    millis = int(frac.ljust(3, "0")[:3]) if frac else 0
    try:
        return datetime(year, month, day, hour, minute, second, millis * 1000, tzinfo=timezone.utc)
    except ValueError as exc:
        raise ValueError(f"invalid timestamp {text!r}: {exc}") from exc


def to_millis(dt: datetime) -> datetime:
    """Normalize to UTC and truncate below millisecond precision."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    dt = dt.astimezone(timezone.utc)
    return dt.replace(microsecond=dt.microsecond - dt.microsecond % 1000)


def format_timestamp(dt: datetime, compat: bool = False) -> str:
    dt = to_millis(dt)
    base = dt.strftime("%Y-%m-%dT%H:%M:%S")
    millis = dt.microsecond // 1000
    if compat:
        return base if millis == 0 else f"{base}.{millis:03d}"
    return f"{base}.{millis:03d}Z"


def utc_now() -> datetime:
    return to_millis(datetime.now(timezone.utc))
