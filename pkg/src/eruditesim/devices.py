"""Event-driven device models: flash SSD arrays, point-to-point links, and
the multi-port switch.

Serialized resources (link wires, flash channel buses, SSD host interfaces)
use greedy FIFO reservation: callers present transfers in non-decreasing
ready time (guaranteed by presenting them from event handlers in event
order), and the resource answers with the exact departure time a FIFO queue
would give.  This is equivalent to simulating the queue event by event but
costs no heap traffic, which matters at millions of fine-grained transfers
per run.

Flash timing model: an array read is a fixed pipelined latency (the chip
sustains overlapping accesses through plane and cache-register parallelism),
the channel bus serializes data-out at channel_bandwidth, and the SSD host
interface serializes at the advertised random-access bandwidth.  What moves
on the buses per command is the readout granule cover, not the requested
bytes: a device with a full-array readout ships the whole array width per
access no matter how little the caller wanted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .workloads import granule_cover

__all__ = [
    "QueueFull",
    "MisalignedAccess",
    "TagsExhausted",
    "NoRoute",
    "FlashSsdConfig",
    "LinkConfig",
    "SwitchConfig",
    "ComputeConfig",
    "effective_bandwidth",
    "Link",
    "FlashSsd",
    "Switch",
]

NS_PER_S = 10**9


class QueueFull(RuntimeError):
    """The SSD has no free command slot; the caller must back-pressure."""


class MisalignedAccess(ValueError):
    """Command offset/length is not a multiple of the device granularity."""


class TagsExhausted(RuntimeError):
    """No free outstanding-transaction tag; the injector must back off."""


class NoRoute(ValueError):
    """The switch has no port for the requested destination."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _xfer_ns(nbytes: int, bandwidth: int) -> int:
    """Wire occupancy in integer ns, rounded half up."""
    return (nbytes * NS_PER_S + bandwidth // 2) // bandwidth


@dataclass(frozen=True)
class FlashSsdConfig:
    """Geometry and timing of one flash SSD.

    readout_granularity selects the array data-out mode: equal to
    array_data_width for a conventional full-array device, 8 KiB for
    partial-array parts, down to min_access_granularity for a fine-grained
    array.  channels * channel_bandwidth bounds the flash-side aggregate and
    must cover the advertised interface bandwidth.
    """

    channels: int = 32
    chips_per_channel: int = 8
    array_access_latency_ns: int = 64_000
    array_data_width: int = 16384
    min_access_granularity: int = 128
    readout_granularity: int = 128
    channel_bandwidth: int = 1_200_000_000
    advertised_bandwidth: int = 6_000_000_000
    queue_depth: int = 65536

    def validate(self) -> None:
        if self.channels < 1 or self.chips_per_channel < 1:
            raise ValueError("channels and chips_per_channel must be >= 1")
        if not _is_pow2(self.min_access_granularity) or not _is_pow2(self.array_data_width):
            raise ValueError("min_access_granularity and array_data_width must be powers of two")
        if not _is_pow2(self.readout_granularity):
            raise ValueError("readout_granularity must be a power of two")
        if not (self.min_access_granularity <= self.readout_granularity <= self.array_data_width):
            raise ValueError("readout_granularity must lie between min granularity and array width")
        if self.queue_depth < 1:
            raise ValueError("queue_depth must be >= 1")
        if self.channel_bandwidth < 1 or self.advertised_bandwidth < 1:
            raise ValueError("bandwidths must be positive")
        if self.channels * self.channel_bandwidth < self.advertised_bandwidth:
            raise ValueError(
                "aggregate channel bandwidth under full concurrency must cover "
                "the advertised bandwidth"
            )
        if self.array_access_latency_ns < 0:
            raise ValueError("array_access_latency must be >= 0")


@dataclass(frozen=True)
class LinkConfig:
    """A serialized point-to-point link: a transfer occupies the wire for
    (payload + header) / bandwidth and holds a tag until delivery."""

    bandwidth: int = 16_000_000_000
    propagation_latency_ns: int = 0
    header_bytes: int = 0
    max_tags: int = 65536

    def validate(self) -> None:
        if self.bandwidth < 1:
            raise ValueError("bandwidth must be positive")
        if self.max_tags < 1:
            raise ValueError("max_tags must be >= 1")
        if self.header_bytes < 0 or self.propagation_latency_ns < 0:
            raise ValueError("header_bytes and propagation_latency must be >= 0")


@dataclass(frozen=True)
class SwitchConfig:
    """Output-queued switch: per-port egress links plus a fixed routing
    latency.  The tag space bounds transactions in flight across the fabric
    and is sized far beyond a single device queue so fine-grained flood
    traffic is throttled, never dropped."""

    ports: int = 2
    port_link: LinkConfig = field(
        default_factory=lambda: LinkConfig(header_bytes=16, propagation_latency_ns=50)
    )
    routing_latency_ns: int = 100
    tag_space: int = 1 << 20

    def validate(self) -> None:
        if self.ports < 1:
            raise ValueError("switch needs at least one port")
        if self.tag_space < 1:
            raise ValueError("tag_space must be >= 1")
        if self.routing_latency_ns < 0:
            raise ValueError("routing_latency must be >= 0")
        self.port_link.validate()


@dataclass(frozen=True)
class ComputeConfig:
    """The GPU-style compute unit: SMs of schedulable threads plus its HBM."""

    sm_count: int = 4
    threads_per_sm: int = 2048
    peak_ops_per_s: int = 312 * 10**12
    element_size: int = 2
    hbm_bandwidth: int = 1555 * 10**9
    hbm_capacity: int = 4 * 2**30

    @property
    def total_threads(self) -> int:
        return self.sm_count * self.threads_per_sm

    def validate(self) -> None:
        if self.sm_count < 1 or self.threads_per_sm < 1:
            raise ValueError("sm_count and threads_per_sm must be >= 1")
        if min(self.peak_ops_per_s, self.element_size, self.hbm_bandwidth, self.hbm_capacity) < 1:
            raise ValueError("compute throughput/memory fields must be positive")


def effective_bandwidth(cfg: FlashSsdConfig, request_size: int) -> Fraction:
    """Useful bytes per second the SSD delivers at a given request size.

    The array always reads out readout_granularity-sized units, so useful
    bandwidth is the advertised raw rate scaled by the fraction of each
    readout the request actually wanted.
    """
    if request_size < 1:
        raise ValueError("request_size must be >= 1")
    lo, hi = granule_cover(0, request_size, cfg.readout_granularity)
    return Fraction(cfg.advertised_bandwidth * request_size, hi - lo)


class Link:
    """Greedy FIFO reservation over one wire.

    occupy() serializes a transfer without tag accounting, for callers whose
    outstanding count is bounded elsewhere (SSD queue depth, switch tag
    space).  reserve()/release() add tag accounting for links where max_tags
    is the back-pressure mechanism; release is called from the delivery
    event.  Both require non-decreasing ready times across calls.
    """

    __slots__ = ("cfg", "free_at", "outstanding", "bytes_moved", "payload_bytes", "transfers")

    def __init__(self, cfg: LinkConfig) -> None:
        cfg.validate()
        self.cfg = cfg
        self.free_at = 0
        self.outstanding = 0
        self.bytes_moved = 0  # payload + headers
        self.payload_bytes = 0
        self.transfers = 0

    def occupancy_ns(self, payload: int) -> int:
        return _xfer_ns(payload + self.cfg.header_bytes, self.cfg.bandwidth)

    def occupy(self, ready_at: int, payload: int) -> int:
        """Serialize one transfer; returns its delivery time."""
        start = self.free_at if self.free_at > ready_at else ready_at
        self.free_at = start + self.occupancy_ns(payload)
        self.bytes_moved += payload + self.cfg.header_bytes
        self.payload_bytes += payload
        self.transfers += 1
        return self.free_at + self.cfg.propagation_latency_ns

    def try_reserve(self, ready_at: int, payload: int) -> int | None:
        """Tag-checked occupy; None when every tag is in flight."""
        if self.outstanding >= self.cfg.max_tags:
            return None
        self.outstanding += 1
        return self.occupy(ready_at, payload)

    def reserve(self, ready_at: int, payload: int) -> int:
        out = self.try_reserve(ready_at, payload)
        if out is None:
            raise TagsExhausted(f"link has {self.cfg.max_tags} transfers in flight")
        return out

    def release(self) -> None:
        self.outstanding -= 1
        if self.outstanding < 0:
            raise RuntimeError("link tag released twice")

    @property
    def busy_until(self) -> int:
        return self.free_at


class FlashSsd:
    """One SSD: striped channels/chips behind a serialized host interface.

    submit() performs admission (queue depth), alignment checks, and
    placement by physical-address striping (block mod channels selects the
    channel, the quotient mod chips_per_channel the chip), then returns the
    time the readout has crossed the channel bus.  The caller schedules an
    event at that time and calls interface_transfer() from it, keeping the
    host-interface FIFO in true arrival order; it calls complete() at the
    interface delivery time to free the command slot.
    """

    __slots__ = ("cfg", "ssd_id", "block_size", "in_flight", "_chan_free",
                 "interface", "audit", "served")

    def __init__(self, cfg: FlashSsdConfig, ssd_id: int = 0, block_size: int = 512,
                 audit: bool = False) -> None:
        cfg.validate()
        self.cfg = cfg
        self.ssd_id = ssd_id
        self.block_size = block_size
        self.in_flight = 0
        self._chan_free = [0] * cfg.channels
        self.interface = Link(LinkConfig(bandwidth=cfg.advertised_bandwidth))
        self.audit: list[tuple[int, str, int, int, int, int]] | None = [] if audit else None
        self.served = 0

    @property
    def free_slots(self) -> int:
        return self.cfg.queue_depth - self.in_flight

    def placement(self, pblock: int) -> tuple[int, int]:
        channel = pblock % self.cfg.channels
        chip = (pblock // self.cfg.channels) % self.cfg.chips_per_channel
        return channel, chip

    def readout_bytes(self, phys_byte: int, length: int) -> int:
        lo, hi = granule_cover(phys_byte, length, self.cfg.readout_granularity)
        return hi - lo

    def submit(self, now: int, phys_byte: int, length: int, app_id: str = "") -> tuple[int, int]:
        """Admit one command; returns (channel_done_time, readout_bytes).

        channel_done_time = now + queue wait on the channel bus +
        array_access_latency + readout transfer time over the channel.
        """
        if self.in_flight >= self.cfg.queue_depth:
            raise QueueFull(f"ssd{self.ssd_id} at queue depth {self.cfg.queue_depth}")
        gran = self.cfg.min_access_granularity
        if length < 1 or length % gran or phys_byte % gran:
            raise MisalignedAccess(
                f"offset {phys_byte}/length {length} not aligned to {gran}B"
            )
        self.in_flight += 1
        lo, hi = granule_cover(phys_byte, length, self.cfg.readout_granularity)
        readout = hi - lo
        channel, _chip = self.placement(phys_byte // self.block_size)
        ready = now + self.cfg.array_access_latency_ns
        chan_free = self._chan_free[channel]
        start = chan_free if chan_free > ready else ready
        chan_done = start + _xfer_ns(readout, self.cfg.channel_bandwidth)
        self._chan_free[channel] = chan_done
        if self.audit is not None:
            self.audit.append((now, app_id, self.ssd_id, phys_byte, length, channel))
        self.served += 1
        return chan_done, readout

    def interface_transfer(self, now: int, readout: int) -> int:
        """Serialize the readout on the host interface; returns delivery."""
        return self.interface.occupy(now, readout)

    def complete(self) -> None:
        """Free the command slot; called at the interface delivery time."""
        self.in_flight -= 1
        if self.in_flight < 0:
            raise RuntimeError("ssd completion without matching submit")


class Switch:
    """Output-queued crossbar: one crossing costs the source port's egress
    wire plus the routing latency; loopback costs routing only."""

    __slots__ = ("cfg", "_egress", "tags_in_use")

    def __init__(self, cfg: SwitchConfig) -> None:
        cfg.validate()
        self.cfg = cfg
        self._egress = [Link(cfg.port_link) for _ in range(cfg.ports)]
        self.tags_in_use = 0

    def try_acquire_tag(self) -> bool:
        if self.tags_in_use >= self.cfg.tag_space:
            return False
        self.tags_in_use += 1
        return True

    def release_tag(self) -> None:
        self.tags_in_use -= 1
        if self.tags_in_use < 0:
            raise RuntimeError("switch tag released twice")

    def route(self, now: int, src_port: int, dst_port: int, payload: int) -> int:
        """Delivery time of a message from src_port to dst_port."""
        if not (0 <= src_port < self.cfg.ports and 0 <= dst_port < self.cfg.ports):
            raise NoRoute(f"port pair ({src_port}, {dst_port}) outside 0..{self.cfg.ports - 1}")
        if src_port == dst_port:
            return now + self.cfg.routing_latency_ns
        return self._egress[src_port].occupy(now, payload) + self.cfg.routing_latency_ns

    def egress_bytes(self, port: int) -> int:
        return self._egress[port].bytes_moved
