"""Unit parsing and formatting.

Canonical units are bytes and bytes/second. Suffixes are decimal SI
(KB = 10^3 bytes, MBps = 10^6 bytes/second). Bits are never used.
"""

from __future__ import annotations

import re

SIZE_SUFFIXES = {"B": 1.0, "KB": 1e3, "MB": 1e6, "GB": 1e9, "TB": 1e12}
RATE_SUFFIXES = {"Bps": 1.0, "KBps": 1e3, "MBps": 1e6, "GBps": 1e9}

_NUMBER_RE = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([A-Za-z]*)\s*$")


class UnitSuffixError(ValueError):
    """Raised for an unrecognized or missing unit suffix."""


def _parse(value, suffixes: dict[str, float], kind: str, field: str) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, str):
        raise UnitSuffixError(f"{field or kind}: expected number or string, got {type(value).__name__}")
    m = _NUMBER_RE.match(value)
    if not m:
        raise UnitSuffixError(f"{field or kind}: cannot parse {value!r}")
    magnitude, suffix = m.groups()
    if suffix == "":
        return float(magnitude)
    if suffix not in suffixes:
        known = ", ".join(sorted(suffixes))
        raise UnitSuffixError(f"{field or kind}: unknown suffix {suffix!r} in {value!r} (accepted: {known})")
    return float(magnitude) * suffixes[suffix]


def parse_size(value, field: str = "") -> float:
    """Parse a data size into bytes. Accepts numbers (already bytes) or
    strings like '150GB'."""
    return _parse(value, SIZE_SUFFIXES, "size", field)


def parse_rate(value, field: str = "") -> float:
    """Parse a rate into bytes/second. Accepts numbers (already bytes/s) or
    strings like '100MBps'."""
    return _parse(value, RATE_SUFFIXES, "rate", field)


def format_size(nbytes: float) -> str:
    """Human-readable size, decimal units."""
    for suffix, scale in (("TB", 1e12), ("GB", 1e9), ("MB", 1e6), ("KB", 1e3)):
        if abs(nbytes) >= scale:
            return f"{nbytes / scale:g}{suffix}"
    return f"{nbytes:g}B"


def format_rate(rate: float) -> str:
    for suffix, scale in (("GBps", 1e9), ("MBps", 1e6), ("KBps", 1e3)):
        if abs(rate) >= scale:
            return f"{rate / scale:g}{suffix}"
    return f"{rate:g}Bps"
