"""Measurement plumbing: per-run counters, latency percentiles, in-flight
occupancy histogram, per-step time breakdown, and the CSV emitters.

Bandwidth is measured over [measure_start, end of run]; a warmup window lets
steady-state studies exclude the closed-loop ramp.  The in-flight histogram
is exact (time integral over every level change), and the timeline is a
periodic sample of the same counter.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np

__all__ = [
    "BASELINE_STEPS",
    "ERUDITE_STEPS",
    "METRICS_COLUMNS",
    "TIMELINE_COLUMNS",
    "STEPS_COLUMNS",
    "MetricsCollector",
    "MetricsReport",
    "write_metrics_csv",
    "write_timeline_csv",
    "write_steps_csv",
]

# Fig-style step decomposition of one request on each access path.
BASELINE_STEPS = (
    "open_check",
    "os_software_stack",
    "ssd_dma",
    "host_buffer_ready",
    "host_to_gpu_copy",
    "gpu_access",
)
ERUDITE_STEPS = (
    "gpu_issue",
    "storage_access",
    "gpu_poll",
)

METRICS_COLUMNS = ("metric", "value")
TIMELINE_COLUMNS = ("time_ns", "in_flight")
STEPS_COLUMNS = ("step", "count", "total_ns", "mean_ns")


class MetricsCollector:
    """Mutable counters owned by one simulation instance."""

    __slots__ = (
        "steps", "measure_start", "injected", "completed", "rejected",
        "useful_bytes", "fetched_bytes", "raw_bytes", "latencies",
        "step_total", "step_count", "inflight", "inflight_max",
        "_inflight_since", "inflight_hist", "cpu_busy_ns", "samples",
        "ssd_events",
    )

    def __init__(self, steps: tuple[str, ...], measure_start: int = 0) -> None:
        self.steps = steps
        self.measure_start = measure_start
        self.injected = 0
        self.completed = 0
        self.rejected = 0
        self.useful_bytes = 0
        self.fetched_bytes = 0
        self.raw_bytes = 0
        self.latencies: list[int] = []
        self.step_total = {name: 0 for name in steps}
        self.step_count = {name: 0 for name in steps}
        self.inflight = 0
        self.inflight_max = 0
        self._inflight_since = 0
        self.inflight_hist: dict[int, int] = {}
        self.cpu_busy_ns = 0
        self.samples: list[tuple[int, int]] = []
        self.ssd_events = 0

    def command_injected(self, now: int) -> None:
        self.injected += 1
        self._bump(now, +1)

    def command_rejected(self, now: int) -> None:
        self.rejected += 1
        self._bump(now, -1)

    def command_completed(self, now: int, issued_at: int, useful: int,
                          fetched: int, raw: int) -> None:
        self.completed += 1
        self._bump(now, -1)
        if now >= self.measure_start:
            self.useful_bytes += useful
            self.fetched_bytes += fetched
            self.raw_bytes += raw
            self.latencies.append(now - issued_at)

    def step(self, name: str, duration_ns: int) -> None:
        self.step_total[name] += duration_ns
        self.step_count[name] += 1

    def _bump(self, now: int, delta: int) -> None:
        level = self.inflight
        held = now - self._inflight_since
        if held > 0:
            self.inflight_hist[level] = self.inflight_hist.get(level, 0) + held
        self._inflight_since = now
        self.inflight = level + delta
        if self.inflight > self.inflight_max:
            self.inflight_max = self.inflight

    def sample(self, now: int) -> None:
        self.samples.append((now, self.inflight))

    def finish(self, now: int) -> None:
        self._bump(now, 0)

    def report(self, elapsed_ns: int, path: str) -> "MetricsReport":
        window = max(1, elapsed_ns - self.measure_start)
        seconds = window / 1e9
        lat = np.asarray(self.latencies, dtype=np.int64)
        have = lat.size > 0
        hist_total = sum(self.inflight_hist.values())
        inflight_mean = (
            sum(level * t for level, t in self.inflight_hist.items()) / hist_total
            if hist_total else 0.0
        )
        return MetricsReport(
            path=path,
            elapsed_ns=elapsed_ns,
            useful_bandwidth=self.useful_bytes / seconds,
            raw_bandwidth=self.raw_bytes / seconds,
            iops=len(self.latencies) / seconds,
            latency_mean_ns=float(lat.mean()) if have else 0.0,
            latency_p50_ns=float(np.percentile(lat, 50)) if have else 0.0,
            latency_p99_ns=float(np.percentile(lat, 99)) if have else 0.0,
            amplification=(
                float(Fraction(self.fetched_bytes, self.useful_bytes))
                if self.useful_bytes else 0.0
            ),
            inflight_mean=inflight_mean,
            inflight_max=self.inflight_max,
            inflight_hist=dict(sorted(self.inflight_hist.items())),
            cpu_busy_ns=self.cpu_busy_ns,
            injected=self.injected,
            completed=self.completed,
            rejected=self.rejected,
            useful_bytes=self.useful_bytes,
            fetched_bytes=self.fetched_bytes,
            raw_bytes=self.raw_bytes,
            step_names=self.steps,
            step_total=dict(self.step_total),
            step_count=dict(self.step_count),
            timeline=list(self.samples),
        )


@dataclass(frozen=True)
class MetricsReport:
    """Immutable result of one run; what the CSV emitters serialize."""

    path: str
    elapsed_ns: int
    useful_bandwidth: float  # bytes/s of workload-consumed data
    raw_bandwidth: float     # bytes/s crossing the measured link, headers included
    iops: float
    latency_mean_ns: float
    latency_p50_ns: float
    latency_p99_ns: float
    amplification: float
    inflight_mean: float
    inflight_max: int
    inflight_hist: dict[int, int]
    cpu_busy_ns: int
    injected: int
    completed: int
    rejected: int
    useful_bytes: int
    fetched_bytes: int
    raw_bytes: int
    step_names: tuple[str, ...]
    step_total: dict[str, int]
    step_count: dict[str, int]
    timeline: list[tuple[int, int]]

    SCALAR_FIELDS = (
        "path", "elapsed_ns", "useful_bandwidth", "raw_bandwidth", "iops",
        "latency_mean_ns", "latency_p50_ns", "latency_p99_ns", "amplification",
        "inflight_mean", "inflight_max", "cpu_busy_ns",
        "injected", "completed", "rejected",
        "useful_bytes", "fetched_bytes", "raw_bytes", "step_count_total",
    )

    @property
    def step_count_total(self) -> int:
        return len(self.step_names)

    def scalar_rows(self) -> list[tuple[str, object]]:
        return [(name, getattr(self, name)) for name in self.SCALAR_FIELDS]

    def step_rows(self) -> list[tuple[str, int, int, float]]:
        rows = []
        for name in self.step_names:
            count = self.step_count[name]
            total = self.step_total[name]
            rows.append((name, count, total, total / count if count else 0.0))
        return rows


def _write(path: Path, header: Iterable[str], rows: Iterable[Iterable[object]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(header))
        writer.writerows(rows)


def write_metrics_csv(report: MetricsReport, path: Path) -> None:
    _write(path, METRICS_COLUMNS, report.scalar_rows())


def write_timeline_csv(report: MetricsReport, path: Path) -> None:
    _write(path, TIMELINE_COLUMNS, report.timeline)


def write_steps_csv(report: MetricsReport, path: Path) -> None:
    _write(path, STEPS_COLUMNS, report.step_rows())
