"""Parsing and formatting of unit-suffixed quantities.

Scenario files use human-readable suffixes ("16GB/s", "64us", "512B",
"1e6/s").  Internally everything is canonical integers: bytes, nanoseconds,
bytes per second.  Decimal prefixes are powers of ten (1 GB = 1e9 B); binary
prefixes (KiB, MiB, ...) are powers of two.
"""

from __future__ import annotations

import re

__all__ = [
    "UnitError",
    "parse_bytes",
    "parse_duration_ns",
    "parse_bytes_per_sec",
    "parse_per_sec",
    "fmt_bytes",
    "fmt_duration",
]


class UnitError(ValueError):
    """A quantity string could not be parsed or has the wrong dimension."""


_BYTE_SUFFIXES = {
    "": 1,
    "B": 1,
    "KB": 10**3,
    "MB": 10**6,
    "GB": 10**9,
    "TB": 10**12,
    "KIB": 2**10,
    "MIB": 2**20,
    "GIB": 2**30,
    "TIB": 2**40,
}

_TIME_SUFFIXES_NS = {
    "NS": 1,
    "US": 10**3,
    "µS": 10**3,  # µs
    "MS": 10**6,
    "S": 10**9,
}

_NUM_RE = re.compile(r"^\s*([0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?)\s*([^\s]*)\s*$")


def _split(text: str) -> tuple[float, str]:
    m = _NUM_RE.match(text)
    if m is None:
        raise UnitError(f"cannot parse quantity {text!r}")
    return float(m.group(1)), m.group(2).upper()


def _as_int(value: float, text: str) -> int:
    out = round(value)
    if abs(value - out) > 1e-6 * max(1.0, abs(value)):
        raise UnitError(f"{text!r} is not an integral quantity")
    return int(out)


def parse_bytes(value: int | str) -> int:
    """Parse a byte count such as 512, "512B", "16KiB", "1GB"."""
    if isinstance(value, bool):
        raise UnitError(f"cannot parse quantity {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        return _as_int(value, str(value))
    num, suffix = _split(value)
    if suffix not in _BYTE_SUFFIXES:
        raise UnitError(f"unknown byte unit {suffix!r} in {value!r}")
    return _as_int(num * _BYTE_SUFFIXES[suffix], value)


def parse_duration_ns(value: int | str) -> int:
    """Parse a duration such as 100, "32ns", "64us", "5ms", "1s" into ns."""
    if isinstance(value, bool):
        raise UnitError(f"cannot parse quantity {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        return _as_int(value, str(value))
    num, suffix = _split(value)
    if suffix not in _TIME_SUFFIXES_NS:
        raise UnitError(f"unknown time unit {suffix!r} in {value!r}")
    return _as_int(num * _TIME_SUFFIXES_NS[suffix], value)


def parse_bytes_per_sec(value: int | str) -> int:
    """Parse a bandwidth such as "16GB/s" or a plain integer in B/s."""
    if isinstance(value, bool):
        raise UnitError(f"cannot parse quantity {value!r}")
    if isinstance(value, (int, float)):
        return _as_int(float(value), str(value))
    text = value.strip()
    if text.upper().endswith("/S"):
        text = text[:-2]
    return parse_bytes(text)


def parse_per_sec(value: int | float | str) -> float:
    """Parse an event rate such as "1e6/s" or a plain number per second."""
    if isinstance(value, bool):
        raise UnitError(f"cannot parse quantity {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    text = value.strip()
    if text.upper().endswith("/S"):
        text = text[:-2]
    num, suffix = _split(text)
    if suffix:
        raise UnitError(f"unexpected unit {suffix!r} in rate {value!r}")
    return num


def fmt_bytes(n: int) -> str:
    """Render a byte count with the largest exact decimal suffix."""
    for suffix, scale in (("TB", 10**12), ("GB", 10**9), ("MB", 10**6), ("KB", 10**3)):
        if n >= scale and n % scale == 0:
            return f"{n // scale}{suffix}"
    return f"{n}B"


def fmt_duration(ns: int) -> str:
    """Render a duration with the largest exact suffix."""
    for suffix, scale in (("s", 10**9), ("ms", 10**6), ("us", 10**3)):
        if ns >= scale and ns % scale == 0:
            return f"{ns // scale}{suffix}"
    return f"{ns}ns"
