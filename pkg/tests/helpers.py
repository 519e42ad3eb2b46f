"""Brute-force oracles shared across test modules.

These deliberately re-derive results by exhaustive enumeration so the
library implementations are checked against an independent route.
"""

from __future__ import annotations

import random

import numpy as np

from nocsim.topology import Topology


def all_shortest_paths(t: Topology, s: int, d: int) -> list[list[int]]:
    """Every minimal path from s to d, by recursive enumeration."""
    if s == d:
        return [[s]]
    x, y = t.xy(s)
    dx, dy = t.xy(d)
    paths = []
    steps = []
    if dx > x:
        steps.append((1, 0))
    if dx < x:
        steps.append((-1, 0))
    if dy > y:
        steps.append((0, 1))
    if dy < y:
        steps.append((0, -1))
    for ox, oy in steps:
        nxt = t.node_at(x + ox, y + oy)
        for rest in all_shortest_paths(t, nxt, d):
            paths.append([s] + rest)
    return paths


def channel_on_some_shortest_path(t: Topology, s: int, d: int, src: int, dst: int) -> bool:
    return any(
        any(a == src and b == dst for a, b in zip(p, p[1:]))
        for p in all_shortest_paths(t, s, d)
    )


def oracle_possibility_weights(t: Topology, m: np.ndarray):
    """Pair-sum channel weights via exhaustive shortest-path enumeration."""
    w = {}
    w_drn = {}
    n = t.n_nodes
    for c in t.channels:
        key = (c.src, c.dst)
        w[key] = 0.0
        w_drn[key] = 0.0
        for s in range(n):
            for d in range(n):
                if s == d or m[s, d] == 0:
                    continue
                if channel_on_some_shortest_path(t, s, d, c.src, c.dst):
                    w[key] += m[s, d]
                    if d == c.dst:
                        w_drn[key] += m[s, d]
    return w, w_drn


def oracle_path_weights(t: Topology, m: np.ndarray):
    """Path-share channel weights: each pair spread evenly over its minimal paths."""
    w = {(c.src, c.dst): 0.0 for c in t.channels}
    n = t.n_nodes
    for s in range(n):
        for d in range(n):
            if s == d or m[s, d] == 0:
                continue
            paths = all_shortest_paths(t, s, d)
            share = m[s, d] / len(paths)
            for p in paths:
                for a, b in zip(p, p[1:]):
                    w[(a, b)] += share
    return w


def random_matrix(t: Topology, seed: int) -> np.ndarray:
    """Random admissible traffic matrix: non-negative, zero diagonal, I/O only."""
    rng = random.Random(seed)
    n = t.n_nodes
    m = np.zeros((n, n))
    io = sorted(t.io_nodes)
    for s in io:
        for d in io:
            if s != d:
                m[s, d] = rng.random()
    return m / m.sum()
