"""Traffic matrices and traces.

A traffic matrix is an |N| x |N| numpy array of non-negative fractions
summing to 1, entry [s, d] giving the share of total traffic sourced at s
and destined to d. The diagonal is zero (self-traffic crosses no channel)
and rows/columns of non-I/O nodes are zero.
"""

from __future__ import annotations

import csv
import random
import warnings
from dataclasses import dataclass

import numpy as np

from nocsim.topology import Topology

PATTERNS = ("uniform", "shuffle", "permutation", "overturn")


@dataclass(frozen=True)
class TraceEvent:
    """One injected packet: cycle, endpoints, and size in flits."""

    cycle: int
    src: int
    dst: int
    flits: int


def normalize(m: np.ndarray) -> np.ndarray:
    """Scale entries to sum to 1. Diagonal traffic is dropped with a warning."""
    m = np.asarray(m, dtype=float)
    if np.any(m < 0):
        raise ValueError("traffic matrix has negative entries")
    if np.any(np.diag(m) > 0):
        warnings.warn("dropping diagonal (self) traffic; it traverses no channel")
        m = m.copy()
        np.fill_diagonal(m, 0.0)
    total = m.sum()
    if total <= 0:
        raise ValueError("traffic matrix is all zero; nothing to normalize")
    return m / total


def validate_matrix(t: Topology, m: np.ndarray, tol: float = 1e-9) -> None:
    """Raise if m violates the traffic-matrix invariants for topology t."""
    n = t.n_nodes
    if m.shape != (n, n):
        raise ValueError(f"matrix shape {m.shape} does not match the {n}-node topology")
    if np.any(m < 0):
        raise ValueError("traffic matrix has negative entries")
    if np.any(np.diag(m) != 0):
        raise ValueError("traffic matrix has nonzero diagonal entries")
    if abs(m.sum() - 1.0) > tol:
        raise ValueError(f"traffic matrix sums to {m.sum()}, expected 1")
    non_io = [i for i in range(n) if i not in t.io_nodes]
    if non_io and (np.any(m[non_io, :] != 0) or np.any(m[:, non_io] != 0)):
        raise ValueError("traffic matrix has traffic at non-I/O nodes")


def generate_pattern(t: Topology, pattern: str, seed: int = 0) -> np.ndarray:
    """Synthesize a normalized traffic matrix over the topology's I/O nodes.

    uniform      equal weight on every ordered I/O pair.
    shuffle      destination index = 1-bit left rotation of the source index
                 over ceil(log2 |io|) bits; needs a power-of-two I/O count.
    permutation  seed-deterministic random permutation of the I/O nodes,
                 fixed for the whole run.
    overturn     point reflection of the grid, d(x, y) =
                 (width-1-x, height-1-y); adversarial, overloads broadly.

    Identity-mapped pairs are dropped in all patterns.
    """
    io = sorted(t.io_nodes)
    k = len(io)
    if k < 2:
        raise ValueError("pattern generation needs at least 2 I/O nodes")
    n = t.n_nodes
    m = np.zeros((n, n))

    if pattern == "uniform":
        for s in io:
            for d in io:
                if s != d:
                    m[s, d] = 1.0
    elif pattern == "shuffle":
        if k & (k - 1):
            raise ValueError(f"shuffle needs a power-of-two I/O count, got {k}")
        bits = k.bit_length() - 1
        for i, s in enumerate(io):
            j = ((i << 1) | (i >> (bits - 1))) & (k - 1)
            if j != i:
                m[s, io[j]] = 1.0
    elif pattern == "permutation":
        rng = random.Random(seed)
        perm = io.copy()
        rng.shuffle(perm)
        for s, d in zip(io, perm):
            if s != d:
                m[s, d] = 1.0
    elif pattern == "overturn":
        io_set = t.io_nodes
        for s in io:
            x, y = t.xy(s)
            d = t.node_at(t.width - 1 - x, t.height - 1 - y)
            if d != s and d in io_set:
                m[s, d] = 1.0
    else:
        raise ValueError(f"unknown traffic pattern {pattern!r}")

    return normalize(m)


def load_matrix(path: str, expected_nodes: int | None = None) -> np.ndarray:
    """Read a traffic matrix from CSV (|N| rows x |N| values) and normalize it.

    Errors carry row/column context. The file is not required to be
    pre-normalized; negative entries and ragged rows are rejected.
    """
    rows: list[list[float]] = []
    with open(path, newline="") as f:
        for r, line in enumerate(csv.reader(f)):
            if not line or (len(line) == 1 and not line[0].strip()):
                continue
            vals = []
            for c, cell in enumerate(line):
                try:
                    v = float(cell)
                except ValueError:
                    raise ValueError(f"{path}: row {r}, column {c}: not a number: {cell!r}") from None
                if v < 0:
                    raise ValueError(f"{path}: row {r}, column {c}: negative entry {v}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    n = len(rows)
    for r, vals in enumerate(rows):
        if len(vals) != n:
            raise ValueError(f"{path}: row {r} has {len(vals)} values, expected {n}")
    if expected_nodes is not None and n != expected_nodes:
        raise ValueError(f"{path}: matrix is {n}x{n}, topology has {expected_nodes} nodes")
    return normalize(np.array(rows))


def load_trace(path: str, n_nodes: int | None = None) -> list[TraceEvent]:
    """Read a packet trace from CSV with header ``cycle,src,dst,flits``.

    Events must be sorted by cycle; src == dst and out-of-range node ids
    are rejected.
    """
    events: list[TraceEvent] = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        expected = ["cycle", "src", "dst", "flits"]
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != expected:
            raise ValueError(f"{path}: expected header {','.join(expected)}, got {reader.fieldnames}")
        last_cycle = -1
        for i, row in enumerate(reader):
            try:
                ev = TraceEvent(int(row["cycle"]), int(row["src"]), int(row["dst"]), int(row["flits"]))
            except (TypeError, ValueError):
                raise ValueError(f"{path}: line {i + 2}: malformed event {row}") from None
            if ev.cycle < last_cycle:
                raise ValueError(f"{path}: line {i + 2}: events not sorted by cycle")
            if ev.src == ev.dst:
                raise ValueError(f"{path}: line {i + 2}: src == dst == {ev.src}")
            if ev.flits < 1:
                raise ValueError(f"{path}: line {i + 2}: flits must be >= 1")
            if n_nodes is not None and not (0 <= ev.src < n_nodes and 0 <= ev.dst < n_nodes):
                raise ValueError(f"{path}: line {i + 2}: node id out of range for {n_nodes} nodes")
            last_cycle = ev.cycle
            events.append(ev)
    return events


def save_trace(path: str, events: list[TraceEvent]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["cycle", "src", "dst", "flits"])
        for ev in events:
            w.writerow([ev.cycle, ev.src, ev.dst, ev.flits])


def trace_matrix(events: list[TraceEvent], n_nodes: int) -> np.ndarray:
    """Aggregate a trace into the empirical traffic matrix (flit-weighted)."""
    m = np.zeros((n_nodes, n_nodes))
    for ev in events:
        m[ev.src, ev.dst] += ev.flits
    return normalize(m)
