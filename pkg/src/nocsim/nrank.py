"""Evolutionary node ranking from topology and traffic distribution.

The model imitates the lifespan of traffic: every node starts with weight
equal to the fraction of traffic it sources, then weight repeatedly
transfers along channels and drains at destinations. The cumulative
weight a node experiences is its NR-weight, a proxy for how likely it is
to be heavily loaded at runtime.

Per-channel quantities, for the channel from u to n:

* possibility weight W      sum of matrix entries over all (s, d) pairs
                            whose detour-free routes can use the channel
                            (minimum-rectangle containment with forward
                            progress);
* draining weight W_drn     same sum restricted to pairs with d == n.

Transfer and draining probabilities follow "more possibilities, higher
probability" at path granularity: each pair's traffic is spread uniformly
over its minimal paths, so a channel's share of a pair is the fraction of
the pair's minimal paths crossing it (1 for pairs on a shared row or
column, small for a single channel deep inside a wide rectangle). The
transfer probability p normalizes these expected channel shares over the
sender's outgoing channels, and the draining probability is the share of
a channel's traffic that terminates at its head. Pair-count weighting
alone would overstate channels that many pairs could merely touch, letting
weight recirculate through drain-free regions and inflating their rank;
path shares keep the evolution calibrated to where traffic actually
flows, which the route planner depends on.

Weight evolution per iteration, synchronously over all nodes:

    w[n]    <- sum_u w[u] * p[u, n] * (1 - p_drn[u, n])
    w_nr[n] <- w_nr[n] + sum_u w[u] * p[u, n]

Evolution stops when the total circulating weight falls below w_th or
after iter_th iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from nocsim.topology import Topology


@dataclass
class ChannelProbabilities:
    """Per-channel weights and probabilities, keyed by (src, dst) node pair.

    ``w``/``w_drn`` are the pair-sum possibility weights; ``path_w``/
    ``path_w_drn`` are the path-share-weighted variants that ``p`` and
    ``p_drn`` are built from. Both share the same support.
    """

    w: dict[tuple[int, int], float]
    w_drn: dict[tuple[int, int], float]
    p: dict[tuple[int, int], float] = field(default_factory=dict)
    p_drn: dict[tuple[int, int], float] = field(default_factory=dict)
    path_w: dict[tuple[int, int], float] = field(default_factory=dict)
    path_w_drn: dict[tuple[int, int], float] = field(default_factory=dict)


@dataclass
class NRankResult:
    w_nr: np.ndarray
    w0: np.ndarray
    iterations: int
    residual: float
    converged: bool
    residual_history: list[float] = field(default_factory=list)


def _channel_masks(t: Topology):
    """For each channel, the boolean (s, d) mask of pairs that may use it."""
    n = t.n_nodes
    ids = np.arange(n)
    x = ids % t.width
    y = ids // t.width
    sx, dx = x[:, None], x[None, :]
    sy, dy = y[:, None], y[None, :]
    off_diag = ids[:, None] != ids[None, :]

    masks = []
    for c in t.channels:
        ux, uy = x[c.src], y[c.src]
        vx, vy = x[c.dst], y[c.dst]
        in_rect = (
            (np.minimum(sx, dx) <= ux)
            & (ux <= np.maximum(sx, dx))
            & (np.minimum(sy, dy) <= uy)
            & (uy <= np.maximum(sy, dy))
            & (np.minimum(sx, dx) <= vx)
            & (vx <= np.maximum(sx, dx))
            & (np.minimum(sy, dy) <= vy)
            & (vy <= np.maximum(sy, dy))
        )
        forward = (np.abs(vx - dx) + np.abs(vy - dy)) == (np.abs(ux - dx) + np.abs(uy - dy) - 1)
        masks.append(in_rect & forward & off_diag)
    return masks


def possibility_weights(t: Topology, m: np.ndarray) -> ChannelProbabilities:
    """Compute W and W_drn for every channel of the topology."""
    masks = _channel_masks(t)
    w: dict[tuple[int, int], float] = {}
    w_drn: dict[tuple[int, int], float] = {}
    for c, mask in zip(t.channels, masks):
        key = (c.src, c.dst)
        w[key] = float(m[mask].sum())
        w_drn[key] = float(m[mask[:, c.dst], c.dst].sum())
    return ChannelProbabilities(w=w, w_drn=w_drn)


def _minimal_path_counts(t: Topology) -> np.ndarray:
    """n_paths[a, b]: number of minimal lattice paths between two nodes."""
    n = t.n_nodes
    ids = np.arange(n)
    x = ids % t.width
    y = ids // t.width
    counts = np.empty((n, n))
    for a in range(n):
        hx = np.abs(x - x[a])
        hy = np.abs(y - y[a])
        counts[a] = [comb(int(hx[b] + hy[b]), int(hx[b])) for b in range(n)]
    return counts


def transition_probabilities(t: Topology, m: np.ndarray) -> ChannelProbabilities:
    """Fill in p and p_drn from path-share-weighted possibility sets.

    A pair contributes to a channel in proportion to the fraction of its
    minimal paths crossing that channel: paths(s, u) * paths(n, d) /
    paths(s, d). Degenerate cases: a node whose outgoing weights are all
    zero gets p = 0 on every outgoing channel (its weight drains in
    place); a channel with zero weight gets p_drn = 0.
    """
    cp = possibility_weights(t, m)
    masks = _channel_masks(t)
    np_counts = _minimal_path_counts(t)
    safe = np.where(np_counts > 0, np_counts, 1.0)
    for c, mask in zip(t.channels, masks):
        key = (c.src, c.dst)
        frac = np.where(mask, np.outer(np_counts[:, c.src], np_counts[c.dst, :]) / safe, 0.0)
        cp.path_w[key] = float((m * frac).sum())
        cp.path_w_drn[key] = float((m[:, c.dst] * frac[:, c.dst]).sum())
    out_total = {u: 0.0 for u in range(t.n_nodes)}
    for (u, _), wv in cp.path_w.items():
        out_total[u] += wv
    for key, wv in cp.path_w.items():
        u = key[0]
        cp.p[key] = wv / out_total[u] if out_total[u] > 0 else 0.0
        cp.p_drn[key] = cp.path_w_drn[key] / wv if wv > 0 else 0.0
    return cp


def run_nrank(
    t: Topology,
    m: np.ndarray,
    w_th: float = 0.01,
    iter_th: int = 100,
) -> NRankResult:
    """Evolve node weights until the circulating total falls below w_th.

    Updates are synchronous (every right-hand-side weight is read from the
    previous iteration) so the result is independent of node order.
    Non-convergence within iter_th iterations is reported via the
    ``converged`` flag, not raised.
    """
    if w_th <= 0 or iter_th <= 0:
        raise ValueError("thresholds must be positive")
    n = t.n_nodes
    cp = transition_probabilities(t, m)
    chan_src = np.fromiter((c.src for c in t.channels), dtype=int)
    chan_dst = np.fromiter((c.dst for c in t.channels), dtype=int)
    p = np.fromiter((cp.p[(c.src, c.dst)] for c in t.channels), dtype=float)
    p_drn = np.fromiter((cp.p_drn[(c.src, c.dst)] for c in t.channels), dtype=float)

    w0 = m.sum(axis=1)
    w = w0.copy()
    w_nr = w0.copy()
    history: list[float] = []
    iterations = 0
    residual = float(w.sum())
    for _ in range(iter_th):
        moved = w[chan_src] * p
        w = np.bincount(chan_dst, weights=moved * (1.0 - p_drn), minlength=n)
        w_nr = w_nr + np.bincount(chan_dst, weights=moved, minlength=n)
        iterations += 1
        residual = float(w.sum())
        history.append(residual)
        if residual < w_th:
            break
    return NRankResult(
        w_nr=w_nr,
        w0=w0,
        iterations=iterations,
        residual=residual,
        converged=residual < w_th,
        residual_history=history,
    )


def save_weights(path: str, result: NRankResult) -> None:
    """Write per-node weights as CSV rows ``node,w0,w_nr``."""
    with open(path, "w") as f:
        f.write("node,w0,w_nr\n")
        for i, (a, b) in enumerate(zip(result.w0, result.w_nr)):
            f.write(f"{i},{a:.9f},{b:.9f}\n")


def load_weights(path: str) -> np.ndarray:
    """Read back the w_nr column of a ``node,w0,w_nr`` CSV."""
    w = {}
    with open(path) as f:
        header = f.readline().strip()
        if header != "node,w0,w_nr":
            raise ValueError(f"{path}: expected header node,w0,w_nr, got {header!r}")
        for line in f:
            node, _, w_nr = line.strip().split(",")
            w[int(node)] = float(w_nr)
    out = np.zeros(max(w) + 1)
    for node, value in w.items():
        out[node] = value
    return out
