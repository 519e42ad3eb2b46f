"""Evaluation metrics over completed simulation results.

All functions here are pure; they can be applied to many runs in
parallel. Node "load" is the number of flits a router forwarded through
any of its ports (ejection included) per measurement cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from nocsim.simulator import SimResults


@dataclass
class MetricsReport:
    mean_latency: float
    p99_latency: float
    max_latency: float
    accepted_throughput: float
    lcv: float
    reorder_peak: int
    node_loads: list[float]


def lcv(loads) -> float:
    """Load coefficient of variation: population std over mean.

    Zero exactly when all loads are equal; scale-invariant. All-zero load
    vectors are rejected.
    """
    arr = np.asarray(loads, dtype=float)
    if arr.size == 0:
        raise ValueError("lcv needs a nonempty load vector")
    if np.any(arr < 0):
        raise ValueError("loads must be non-negative")
    mean = arr.mean()
    if mean == 0:
        raise ValueError("lcv undefined for all-zero loads")
    return float(arr.std() / mean)


def reorder_trace(events) -> tuple[int, list[int]]:
    """Walk flit ejection events through virtual per-destination reorder buffers.

    Each event is ``(cycle, src, dst, seq, packet_flits)`` for one ejected
    flit, time-ordered. A flit is buffered while any earlier-sequence
    packet of its flow is not yet fully ejected, and released in sequence
    order. Occupancy is counted in flits. Returns the peak over time and
    destinations plus the dense per-cycle series of the maximum occupancy.
    """
    peak = 0
    series: list[int] = []
    held: dict[int, int] = {}
    # per flow: lowest not-fully-delivered seq, and per-seq (ejected, size, held)
    flows: dict[tuple[int, int], dict] = {}
    fronts: dict[tuple[int, int], int] = {}
    flushed = 0  # cycles whose end-state has been recorded
    last_cycle = -1
    for cycle, src, dst, seq, size in events:
        if cycle < last_cycle:
            raise ValueError("ejection events must be time-ordered")
        last_cycle = cycle
        occupancy = max(held.values(), default=0)
        while flushed < cycle:
            series.append(occupancy)
            flushed += 1
        key = (src, dst)
        entries = flows.setdefault(key, {})
        front = fronts.setdefault(key, 0)
        got, sz, h = entries.get(seq, (0, size, 0))
        got += 1
        if seq > front:
            h += 1
            held[dst] = held.get(dst, 0) + 1
        entries[seq] = (got, sz, h)
        moved = False
        while front in entries and entries[front][0] >= entries[front][1]:
            held[dst] = held.get(dst, 0) - entries[front][2]
            del entries[front]
            front += 1
            moved = True
        if moved:
            fronts[key] = front
            if front in entries:
                got, sz, h = entries[front]
                if h:
                    held[dst] -= h
                    entries[front] = (got, sz, 0)
        occupancy = max(held.values(), default=0)
        if occupancy > peak:
            peak = occupancy
    if last_cycle >= 0:
        occupancy = max(held.values(), default=0)
        while flushed <= last_cycle:
            series.append(occupancy)
            flushed += 1
    return peak, series


@dataclass
class SaturationEstimate:
    rate: float
    flag: str  # "ok", "all_saturated", or "all_unsaturated"
    zero_load_latency: float


def saturation_throughput(curve, latency_cap_factor: float = 10.0) -> SaturationEstimate:
    """Estimate the saturation point of a latency/throughput sweep.

    ``curve`` holds ``(offered_rate, accepted_throughput, mean_latency)``
    rows. The estimate is the largest offered rate whose accepted
    throughput is at least 99% of offered and whose mean latency stays
    below ``latency_cap_factor`` times the zero-load latency (taken from
    the lowest-rate row). A curve that never or always qualifies is
    flagged rather than rejected; callers should plot the raw curve.
    """
    rows = sorted((float(r), float(a), float(l)) for r, a, l in curve)
    if not rows:
        raise ValueError("empty sweep curve")
    zero_load = rows[0][2]
    cap = latency_cap_factor * zero_load
    good = [r for r, a, l in rows if a >= 0.99 * r and l <= cap]
    if not good:
        return SaturationEstimate(rate=math.nan, flag="all_saturated", zero_load_latency=zero_load)
    if len(good) == len(rows):
        return SaturationEstimate(rate=good[-1], flag="all_unsaturated", zero_load_latency=zero_load)
    return SaturationEstimate(rate=good[-1], flag="ok", zero_load_latency=zero_load)


def build_report(results: SimResults) -> MetricsReport:
    """Summarize one run. Latency stats are NaN when nothing was measured."""
    lat = sorted(results.latencies)
    if lat:
        mean = sum(lat) / len(lat)
        p99 = float(lat[min(len(lat) - 1, math.ceil(0.99 * len(lat)) - 1)])
        mx = float(lat[-1])
    else:
        mean = p99 = mx = math.nan
    loads = [c / results.measure_cycles for c in results.per_node_forwarded]
    active = [v for v in loads if v > 0]
    cv = lcv(active) if active else math.nan
    return MetricsReport(
        mean_latency=mean,
        p99_latency=p99,
        max_latency=mx,
        accepted_throughput=results.accepted_throughput,
        lcv=cv,
        reorder_peak=results.reorder_peak,
        node_loads=loads,
    )
