"""Closed-form calculators for link occupancy, required concurrency,
bandwidth-limited operation rates, data-reuse factors, and packet overheads.

These are the analytic oracles the event-driven simulator is validated
against.  All arithmetic is exact rational (fractions.Fraction); rounding
happens only at presentation, so checks against published figures are
tolerance questions, not rounding-mode questions.  Bandwidths use decimal
units (1 GB/s = 1e9 B/s): that convention makes 512 B / 16 GB/s exactly
32 ns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "ZeroServiceTime",
    "RooflinePoint",
    "TransferScenario",
    "service_time_ns",
    "required_inflight",
    "bw_limited_op_rate",
    "required_reuse",
    "packet_efficiency",
    "packet_overhead",
    "sustainable_ops",
    "ReferenceRow",
    "reference_table",
]

NS_PER_S = 10**9


class ZeroServiceTime(ZeroDivisionError):
    """Concurrency is undefined when a transfer occupies the link for 0 ns."""


@dataclass(frozen=True)
class RooflinePoint:
    """Peak compute throughput paired with the memory system feeding it.

    peak_ops_per_s: operations per second at peak.
    mem_bandwidth:  bytes per second of the memory tier under study.
    element_size:   bytes per data element (2 for FP16, 4 for FP32).
    """

    peak_ops_per_s: int
    mem_bandwidth: int
    element_size: int

    def __post_init__(self) -> None:
        if self.peak_ops_per_s <= 0 or self.mem_bandwidth <= 0 or self.element_size <= 0:
            raise ValueError("RooflinePoint fields must be strictly positive")


@dataclass(frozen=True)
class TransferScenario:
    """A link plus the access pattern crossing it.

    link_bandwidth:  bytes per second, one way.
    access_latency:  nanoseconds from request to first data.
    granularity:     payload bytes per transfer.
    header_bytes:    per-packet protocol overhead, independent of payload.
    """

    link_bandwidth: int
    access_latency_ns: int
    granularity: int
    header_bytes: int = 0

    def __post_init__(self) -> None:
        if self.link_bandwidth <= 0:
            raise ValueError("link_bandwidth must be positive")
        if self.granularity < 1:
            raise ValueError("granularity must be >= 1")
        if self.header_bytes < 0 or self.access_latency_ns < 0:
            raise ValueError("header_bytes and access_latency must be >= 0")


def service_time_ns(s: TransferScenario) -> Fraction:
    """Link occupancy of one transfer: (payload + header) / bandwidth, in ns."""
    return Fraction((s.granularity + s.header_bytes) * NS_PER_S, s.link_bandwidth)


def required_inflight(s: TransferScenario) -> int:
    """Simultaneous accesses needed to hide the latency and saturate the link.

    Little's law: concurrency = latency / per-transfer occupancy, rounded up,
    and never less than one (one request is always in flight).
    """
    service = service_time_ns(s)
    if service == 0:
        raise ZeroServiceTime("zero-byte transfers never saturate a link")
    return max(1, math.ceil(Fraction(s.access_latency_ns) / service))


def bw_limited_op_rate(r: RooflinePoint) -> Fraction:
    """Operations per second sustainable with no data reuse at all."""
    return Fraction(r.mem_bandwidth, r.element_size)


def required_reuse(r: RooflinePoint) -> Fraction:
    """Times each fetched element must be used to sustain peak throughput."""
    return Fraction(r.peak_ops_per_s) / bw_limited_op_rate(r)


def packet_efficiency(payload: int, header: int) -> Fraction:
    """Fraction of link bytes that are payload: payload / (payload + header)."""
    if payload < 1:
        raise ValueError("payload must be >= 1")
    if header < 0:
        raise ValueError("header must be >= 0")
    return Fraction(payload, payload + header)


def packet_overhead(payload: int, header: int) -> Fraction:
    """Complement of packet_efficiency: header / (payload + header)."""
    return 1 - packet_efficiency(payload, header)


def sustainable_ops(r: RooflinePoint, reuse: Fraction | int) -> Fraction:
    """Throughput achievable at a given reuse factor, capped at peak."""
    if reuse < 1:
        raise ValueError("reuse must be >= 1")
    return min(Fraction(r.peak_ops_per_s), reuse * bw_limited_op_rate(r))


@dataclass(frozen=True)
class ReferenceRow:
    """One line of the design-point table: a computed quantity next to the
    published figure for that hardware configuration."""

    name: str
    value: Fraction
    unit: str
    reference: Fraction
    tolerance: float  # relative; 0.0 means the match must be exact

    @property
    def rel_error(self) -> float:
        if self.reference == 0:
            return 0.0
        return abs(float((self.value - self.reference) / self.reference))

    @property
    def within_tolerance(self) -> bool:
        if self.tolerance == 0.0:
            return self.value == self.reference
        return self.rel_error <= self.tolerance


# Design points of current hardware: A100-class GPU (312 TFLOPS FP16,
# 1555 GB/s HBM, 300 GB/s NVLink to host, 32 GB/s PCIe Gen5-era SSD path),
# P100-class GPU (10.6 TFLOPS FP32, 732 GB/s HBM), and a PCIe Gen3 x16 link
# at 16 GB/s one way with a 64 us flash access latency.
A100_FP16_HBM = RooflinePoint(312 * 10**12, 1555 * 10**9, 2)
A100_FP16_NVLINK = RooflinePoint(312 * 10**12, 300 * 10**9, 2)
A100_FP16_PCIE_SSD = RooflinePoint(312 * 10**12, 32 * 10**9, 2)
P100_FP32_HBM = RooflinePoint(10_600_000_000_000, 732 * 10**9, 4)
PCIE3_FINE_GRAIN = TransferScenario(16 * 10**9, 64_000, 512, 0)


def reference_table() -> list[ReferenceRow]:
    """The quantities this package is expected to reproduce, with targets."""
    rows = [
        ReferenceRow(
            "service_time_512B_16GBps",
            service_time_ns(PCIE3_FINE_GRAIN),
            "ns",
            Fraction(32),
            0.0,
        ),
        ReferenceRow(
            "inflight_512B_16GBps_64us",
            Fraction(required_inflight(PCIE3_FINE_GRAIN)),
            "requests",
            Fraction(2000),
            0.0,
        ),
        ReferenceRow(
            "mem_rate_a100_fp16_hbm",
            bw_limited_op_rate(A100_FP16_HBM),
            "ops/s",
            Fraction(777 * 10**9),
            0.001,
        ),
        ReferenceRow(
            "mem_rate_p100_fp32_hbm",
            bw_limited_op_rate(P100_FP32_HBM),
            "ops/s",
            Fraction(186 * 10**9),
            0.025,
        ),
        ReferenceRow(
            "reuse_a100_hbm",
            required_reuse(A100_FP16_HBM),
            "x",
            Fraction(400),
            0.01,
        ),
        ReferenceRow(
            "reuse_a100_nvlink",
            required_reuse(A100_FP16_NVLINK),
            "x",
            Fraction(2080),
            0.0,
        ),
        ReferenceRow(
            "reuse_a100_pcie_ssd",
            required_reuse(A100_FP16_PCIE_SSD),
            "x",
            Fraction(19500),
            0.0,
        ),
        ReferenceRow(
            "reuse_p100_hbm",
            required_reuse(P100_FP32_HBM),
            "x",
            Fraction(569, 10),
            0.025,
        ),
        ReferenceRow(
            "overhead_4KB_h16",
            packet_overhead(4096, 16),
            "fraction",
            Fraction(16, 4112),
            0.0,
        ),
        ReferenceRow(
            "overhead_cacheline32B_h16",
            packet_overhead(32, 16),
            "fraction",
            Fraction(16, 48),
            0.0,
        ),
    ]
    return rows
