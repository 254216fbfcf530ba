"""Deterministic workload generators and byte accounting.

Four access patterns: sequential scans, uniform random slots, embedding-row
lookups, and frontier-driven graph traversal over a CSR layout serialized on
the block space.  A stream is fully determined by its spec and seed, so the
useful-byte total is identical across transfer granularities and across
access paths, which is what makes amplification comparisons meaningful.

Amplification = bytes fetched over the measured link / bytes the workload
actually consumed.  Fetches happen in granularity-aligned granules; an
unaligned useful range can straddle two granules.  Accounting is per
request: two requests touching the same granule fetch it twice unless an
explicit cache is configured (cache management belongs to the application
in the modeled system, so caching is an experiment knob, off by default).
"""

from __future__ import annotations

from collections import OrderedDict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

__all__ = [
    "GraphSpec",
    "SyntheticGraph",
    "WorkloadSpec",
    "AccessStream",
    "AmplificationLedger",
    "granule_cover",
    "build_stream",
    "amplification",
]

_CHUNK = 4096  # random descriptors drawn per RNG call


def granule_cover(offset: int, useful: int, granularity: int) -> tuple[int, int]:
    """Aligned byte range [lo, hi) of granules touched by a useful range."""
    lo = (offset // granularity) * granularity
    hi = ((offset + useful - 1) // granularity + 1) * granularity
    return lo, hi


@dataclass(frozen=True)
class GraphSpec:
    """Synthetic graph shape, or a path to an edge-list file ("u v" lines)."""

    vertices: int = 1000
    avg_degree: int = 8
    kind: str = "power_law"  # power_law | erdos_renyi
    exponent: float = 2.1
    edge_list_path: str | None = None


class SyntheticGraph:
    """CSR adjacency serialized contiguously on the byte space.

    Layout: offsets array of (vertices + 1) uint64 entries at byte 0,
    adjacency array of uint64 vertex ids right after it.  Reading vertex v's
    neighbor list therefore needs offsets[v] and offsets[v+1] (one contiguous
    16-byte read) followed by one read of 8 * degree(v) bytes.
    """

    ENTRY = 8  # bytes per offsets/adjacency entry

    def __init__(self, offsets: np.ndarray, adjacency: np.ndarray) -> None:
        if offsets.ndim != 1 or offsets[0] != 0 or offsets[-1] != len(adjacency):
            raise ValueError("malformed CSR offsets")
        if np.any(np.diff(offsets) < 0):
            raise ValueError("CSR offsets must be non-decreasing")
        self.offsets = offsets.astype(np.int64)
        self.adjacency = adjacency.astype(np.int64)

    @property
    def vertices(self) -> int:
        return len(self.offsets) - 1

    @property
    def edges(self) -> int:
        return int(len(self.adjacency))

    @property
    def offsets_base(self) -> int:
        return 0

    @property
    def adjacency_base(self) -> int:
        return (self.vertices + 1) * self.ENTRY

    @property
    def total_bytes(self) -> int:
        return self.adjacency_base + self.edges * self.ENTRY

    def degree(self, v: int) -> int:
        return int(self.offsets[v + 1] - self.offsets[v])

    def neighbors(self, v: int) -> np.ndarray:
        return self.adjacency[self.offsets[v] : self.offsets[v + 1]]

    @classmethod
    def synthesize(cls, spec: GraphSpec, rng: np.random.Generator) -> "SyntheticGraph":
        n = spec.vertices
        if n < 1:
            raise ValueError("graph needs at least one vertex")
        max_deg = max(1, n - 1)
        if spec.kind == "power_law":
            degrees = np.minimum(rng.zipf(spec.exponent, size=n), max_deg)
            # rescale toward the requested average while keeping determinism
            target = spec.avg_degree * n
            if degrees.sum() > 0:
                scale = target / degrees.sum()
                if scale > 1:
                    degrees = np.minimum((degrees * scale).astype(np.int64) + 1, max_deg)
        elif spec.kind == "erdos_renyi":
            p = min(1.0, spec.avg_degree / max_deg)
            degrees = rng.binomial(max_deg, p, size=n)
        else:
            raise ValueError(f"unknown graph kind {spec.kind!r}")
        degrees = np.maximum(degrees, 1).astype(np.int64)
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(degrees, out=offsets[1:])
        adjacency = np.empty(offsets[-1], dtype=np.int64)
        for v in range(n):
            d = degrees[v]
            # sample neighbors != v, without replacement where possible
            if d >= max_deg:
                neigh = np.delete(np.arange(n, dtype=np.int64), v)[:d]
            else:
                neigh = rng.choice(max_deg, size=d, replace=False).astype(np.int64)
                neigh[neigh >= v] += 1
            adjacency[offsets[v] : offsets[v + 1]] = neigh
        return cls(offsets, adjacency)

    @classmethod
    def from_edge_list(cls, path: str | Path) -> "SyntheticGraph":
        """Read one "u v" directed edge per line; '#' lines are comments."""
        src: list[int] = []
        dst: list[int] = []
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"bad edge line {line!r}")
            src.append(int(parts[0]))
            dst.append(int(parts[1]))
        if not src:
            raise ValueError(f"no edges in {path}")
        u = np.asarray(src, dtype=np.int64)
        v = np.asarray(dst, dtype=np.int64)
        n = int(max(u.max(), v.max())) + 1
        order = np.argsort(u, kind="stable")
        u, v = u[order], v[order]
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.add.at(offsets, u + 1, 1)
        np.cumsum(offsets, out=offsets)
        return cls(offsets, v)


@dataclass(frozen=True)
class WorkloadSpec:
    """What to access, how much of it is useful, and who is asking.

    Exactly one of closed_loop_threads / open_loop_rate drives injection:
    closed loop keeps that many requests in flight, open loop injects at a
    fixed rate regardless of completions.
    """

    kind: str = "uniform_random"  # sequential | uniform_random | embedding_lookup | graph_bfs | trace
    request_useful_bytes: int = 512
    footprint: int = 256 * 2**20
    seed: int | None = None
    closed_loop_threads: int | None = 2048
    open_loop_rate: float | None = None
    total_requests: int | None = None
    file: str = "data"
    app: str = "app0"
    start_vertex: int = 0
    graph: GraphSpec | None = None
    cache_granules: int = 0
    trace_accesses: tuple[tuple[int, int], ...] | None = None

    def validate(self) -> None:
        kinds = ("sequential", "uniform_random", "embedding_lookup", "graph_bfs", "trace")
        if self.kind not in kinds:
            raise ValueError(f"workload kind must be one of {kinds}, got {self.kind!r}")
        if self.request_useful_bytes < 1:
            raise ValueError("request_useful_bytes must be >= 1")
        if self.footprint < self.request_useful_bytes:
            raise ValueError("footprint smaller than one request")
        if (self.closed_loop_threads is None) == (self.open_loop_rate is None):
            raise ValueError("exactly one of closed_loop_threads / open_loop_rate required")
        if self.closed_loop_threads is not None and self.closed_loop_threads < 1:
            raise ValueError("closed_loop_threads must be >= 1")
        if self.open_loop_rate is not None and self.open_loop_rate <= 0:
            raise ValueError("open_loop_rate must be > 0")
        if self.kind == "trace" and not self.trace_accesses:
            raise ValueError("trace workload needs trace_accesses")


class AccessStream:
    """Deterministic iterator of (byte_offset, useful_bytes) descriptors.

    Offsets are relative to the workload's file.  The same spec and seed
    always produce the same stream; finite streams report exhaustion so
    closed-loop actors can drain the scenario.
    """

    def __init__(self, spec: WorkloadSpec, seed: int, graph: SyntheticGraph | None = None):
        spec.validate()
        self.spec = spec
        self._rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        self._emitted = 0
        self._pending: deque[tuple[int, int]] = deque()
        self._finite_done = False
        self.graph = graph
        if spec.kind == "graph_bfs":
            if graph is None:
                self.graph = SyntheticGraph.synthesize(spec.graph or GraphSpec(), self._rng)
            self._pending.extend(_bfs_descriptors(self.graph, spec.start_vertex))
            self._finite_source = True
        elif spec.kind == "sequential":
            u = spec.request_useful_bytes
            self._pending.extend((i * u, u) for i in range(spec.footprint // u))
            self._finite_source = True
        elif spec.kind == "trace":
            self._pending.extend(spec.trace_accesses or ())
            self._finite_source = True
        else:
            self._slots = spec.footprint // spec.request_useful_bytes
            self._finite_source = False

    @property
    def byte_span(self) -> int:
        """Bytes of backing store the stream can address."""
        if self.spec.kind == "graph_bfs":
            assert self.graph is not None
            return self.graph.total_bytes
        if self.spec.kind == "trace":
            return max(o + u for o, u in (self.spec.trace_accesses or ((0, 1),)))
        return self.spec.footprint

    def _refill(self) -> None:
        u = self.spec.request_useful_bytes
        slots = self._rng.integers(0, self._slots, size=_CHUNK)
        self._pending.extend((int(s) * u, u) for s in slots)

    def next(self) -> tuple[int, int] | None:
        """The next descriptor, or None once the stream is exhausted."""
        cap = self.spec.total_requests
        if cap is not None and self._emitted >= cap:
            return None
        if not self._pending:
            if self._finite_source:
                return None
            self._refill()
        self._emitted += 1
        return self._pending.popleft()


def _bfs_descriptors(graph: SyntheticGraph, start: int) -> list[tuple[int, int]]:
    """Frontier-order accesses: each visited vertex contributes one offsets
    read (16 B) and, when its list is non-empty, one adjacency read."""
    if not (0 <= start < graph.vertices):
        raise ValueError(f"start vertex {start} out of range")
    entry = SyntheticGraph.ENTRY
    seen = np.zeros(graph.vertices, dtype=bool)
    seen[start] = True
    frontier = deque([start])
    out: list[tuple[int, int]] = []
    while frontier:
        v = frontier.popleft()
        out.append((graph.offsets_base + v * entry, 2 * entry))
        deg = graph.degree(v)
        if deg:
            out.append((graph.adjacency_base + int(graph.offsets[v]) * entry, deg * entry))
        for w in graph.neighbors(v):
            w = int(w)
            if not seen[w]:
                seen[w] = True
                frontier.append(w)
    return out


@dataclass
class AmplificationLedger:
    """Running totals of bytes moved versus bytes consumed."""

    bytes_fetched: int = 0
    bytes_useful: int = 0

    def record(self, fetched: int, useful: int) -> None:
        self.bytes_fetched += fetched
        self.bytes_useful += useful

    @property
    def factor(self) -> Fraction:
        if self.bytes_useful == 0:
            return Fraction(1)
        return Fraction(self.bytes_fetched, self.bytes_useful)


def build_stream(spec: WorkloadSpec, scenario_seed: int = 0) -> AccessStream:
    """Stream with the spec's own seed, falling back to the scenario seed."""
    seed = spec.seed if spec.seed is not None else scenario_seed
    return AccessStream(spec, seed)


def amplification(
    spec: WorkloadSpec,
    transfer_granularity: int,
    scenario_seed: int = 0,
    max_requests: int | None = None,
) -> Fraction:
    """Replay the stream counting granule fetches; exact rational result.

    Each useful range is mapped onto aligned granules of the given size and
    every touched granule counts as fetched, per request.  With a configured
    cache the replay runs granule-granular LRU in stream order and only
    misses count.
    """
    if transfer_granularity < 1 or transfer_granularity & (transfer_granularity - 1):
        raise ValueError("transfer_granularity must be a power of two")
    stream = build_stream(spec, scenario_seed)
    ledger = AmplificationLedger()
    cap = spec.cache_granules
    lru: OrderedDict[int, None] = OrderedDict()
    seen = 0
    while True:
        if max_requests is not None and seen >= max_requests:
            break
        item = stream.next()
        if item is None:
            break
        seen += 1
        offset, useful = item
        lo, hi = granule_cover(offset, useful, transfer_granularity)
        if cap:
            fetched = 0
            for g in range(lo // transfer_granularity, hi // transfer_granularity):
                if g in lru:
                    lru.move_to_end(g)
                else:
                    fetched += transfer_granularity
                    lru[g] = None
                    if len(lru) > cap:
                        lru.popitem(last=False)
            ledger.record(fetched, useful)
        else:
            ledger.record(hi - lo, useful)
    return ledger.factor
