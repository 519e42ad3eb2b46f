"""Bitmap route selection between the XY and YX dimension-order routes.

For every source/destination pair the planner compares the two candidate
paths by the sum of per-node NR-weights along them and stores the winner
as one bit per destination in the source's bitmap: 0 routes XY, 1 routes
YX. Ties (including the shared-row/column case where the paths coincide)
choose XY. Lookup at runtime is a constant-time bit read.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from nocsim.nrank import NRankResult
from nocsim.topology import Topology, dor_path

XY = 0
YX = 1


@dataclass(frozen=True)
class RouteBitmaps:
    """Per-source bit vectors; bits[s][d] == 1 selects the YX route."""

    bits: tuple[tuple[int, ...], ...]

    @property
    def n_nodes(self) -> int:
        return len(self.bits)


def route_cost(path: list[int], w_nr: np.ndarray) -> float:
    """Sum of NR-weights over every node of the path, endpoints included."""
    if not path:
        raise ValueError("route_cost requires a nonempty path")
    return float(sum(w_nr[n] for n in path))


def compute_bitmaps(t: Topology, nr: NRankResult | np.ndarray) -> RouteBitmaps:
    """Choose XY or YX per ordered I/O pair by the smaller route cost."""
    w_nr = nr.w_nr if isinstance(nr, NRankResult) else np.asarray(nr, dtype=float)
    if len(w_nr) < t.n_nodes:
        raise ValueError(f"need weights for all {t.n_nodes} nodes, got {len(w_nr)}")
    n = t.n_nodes
    rows = []
    io = t.io_nodes
    for s in range(n):
        row = [0] * n
        if s in io:
            for d in io:
                if d == s:
                    continue
                cost_xy = route_cost(dor_path(t, s, d, "XY"), w_nr)
                cost_yx = route_cost(dor_path(t, s, d, "YX"), w_nr)
                if cost_yx < cost_xy:
                    row[d] = 1
        rows.append(tuple(row))
    return RouteBitmaps(bits=tuple(rows))


def lookup(bm: RouteBitmaps, s: int, d: int) -> int:
    """Route choice for the pair: XY (0) or YX (1)."""
    if s == d:
        raise ValueError("lookup requires s != d")
    return bm.bits[s][d]


def export_bitmaps(bm: RouteBitmaps, path: str) -> None:
    """Write one line of '0'/'1' per source node, line index = source id."""
    with open(path, "w") as f:
        for row in bm.bits:
            f.write("".join(str(b) for b in row))
            f.write("\n")


def import_bitmaps(path: str, expected_nodes: int | None = None) -> RouteBitmaps:
    """Read bitmaps back; the file must be square and strictly '0'/'1'."""
    rows: list[tuple[int, ...]] = []
    with open(path) as f:
        lines = [line.rstrip("\n") for line in f if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty bitmap file")
    n = len(lines)
    for i, line in enumerate(lines):
        if len(line) != n:
            raise ValueError(f"{path}: line {i} has {len(line)} bits, expected {n} (truncated or ragged file)")
        if set(line) - {"0", "1"}:
            raise ValueError(f"{path}: line {i} contains characters other than 0/1")
        rows.append(tuple(int(ch) for ch in line))
    if expected_nodes is not None and n != expected_nodes:
        raise ValueError(f"{path}: bitmap covers {n} nodes, topology has {expected_nodes}")
    return RouteBitmaps(bits=tuple(rows))
