"""2D-mesh topology: node geometry, channels, and minimal-path predicates.

Nodes are numbered row-major, ``id = y * width + x``, with x the
faster-varying index and node 0 at a corner. A channel is an ordered pair
of mesh-adjacent nodes; every adjacent pair has channels in both
directions. ``io_nodes`` marks the nodes allowed to inject/eject traffic
(all nodes, or only the boundary for edge-I/O configurations).
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Channel:
    """Directed channel between two mesh-adjacent nodes."""

    src: int
    dst: int


@dataclass(frozen=True)
class Topology:
    width: int
    height: int
    channels: tuple[Channel, ...]
    io_nodes: frozenset[int]
    # adjacency derived from channels; upstream[n] = nodes with a channel into n
    upstream: dict[int, tuple[int, ...]] = field(repr=False, default_factory=dict)
    downstream: dict[int, tuple[int, ...]] = field(repr=False, default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.width * self.height

    def xy(self, node: int) -> tuple[int, int]:
        return node % self.width, node // self.width

    def node_at(self, x: int, y: int) -> int:
        return y * self.width + x

    def manhattan(self, a: int, b: int) -> int:
        ax, ay = self.xy(a)
        bx, by = self.xy(b)
        return abs(ax - bx) + abs(ay - by)


def build_mesh(width: int, height: int, io_mode: str = "all_nodes") -> Topology:
    """Build a full bidirectional 2D mesh.

    io_mode selects which nodes carry I/O ports: "all_nodes", or
    "edge_only" for exactly the boundary nodes (the switching-chip layout
    where I/O modules sit around the mesh edge).
    """
    if width < 1 or height < 1 or width * height < 2:
        raise ValueError(f"mesh {width}x{height} has fewer than 2 nodes; no traffic possible")
    if io_mode not in ("all_nodes", "edge_only"):
        raise ValueError(f"unknown io_mode {io_mode!r}")

    def nid(x: int, y: int) -> int:
        return y * width + x

    channels: list[Channel] = []
    for y in range(height):
        for x in range(width):
            if x + 1 < width:
                channels.append(Channel(nid(x, y), nid(x + 1, y)))
                channels.append(Channel(nid(x + 1, y), nid(x, y)))
            if y + 1 < height:
                channels.append(Channel(nid(x, y), nid(x, y + 1)))
                channels.append(Channel(nid(x, y + 1), nid(x, y)))

    if io_mode == "all_nodes":
        io = frozenset(range(width * height))
    else:
        io = frozenset(
            nid(x, y)
            for y in range(height)
            for x in range(width)
            if x in (0, width - 1) or y in (0, height - 1)
        )

    upstream: dict[int, list[int]] = {n: [] for n in range(width * height)}
    downstream: dict[int, list[int]] = {n: [] for n in range(width * height)}
    for c in channels:
        upstream[c.dst].append(c.src)
        downstream[c.src].append(c.dst)

    return Topology(
        width=width,
        height=height,
        channels=tuple(channels),
        io_nodes=io,
        upstream={n: tuple(us) for n, us in upstream.items()},
        downstream={n: tuple(ds) for n, ds in downstream.items()},
    )


def min_rect_contains(t: Topology, s: int, d: int, c: Channel) -> bool:
    """True iff channel c can appear on a detour-free route from s to d.

    Both channel endpoints must lie inside the axis-aligned rectangle
    spanned by s and d (inclusive), and traversing c must strictly reduce
    the Manhattan distance to d. A backward channel inside the rectangle
    could only occur on a detouring path, so it is excluded.
    """
    if s == d:
        raise ValueError("min_rect_contains requires s != d")
    sx, sy = t.xy(s)
    dx, dy = t.xy(d)
    lox, hix = min(sx, dx), max(sx, dx)
    loy, hiy = min(sy, dy), max(sy, dy)
    ux, uy = t.xy(c.src)
    nx, ny = t.xy(c.dst)
    if not (lox <= ux <= hix and loy <= uy <= hiy):
        return False
    if not (lox <= nx <= hix and loy <= ny <= hiy):
        return False
    return abs(nx - dx) + abs(ny - dy) == abs(ux - dx) + abs(uy - dy) - 1


def dor_path(t: Topology, s: int, d: int, order: str = "XY") -> list[int]:
    """Node sequence of the dimension-order route from s to d, inclusive.

    "XY" walks the X dimension to the destination column first, then Y;
    "YX" the reverse. Length is Manhattan(s, d) + 1; s == d yields [s].
    """
    if order not in ("XY", "YX"):
        raise ValueError(f"unknown dimension order {order!r}")
    x, y = t.xy(s)
    dx, dy = t.xy(d)
    path = [s]

    def walk_x() -> None:
        nonlocal x
        step = 1 if dx > x else -1
        while x != dx:
            x += step
            path.append(t.node_at(x, y))

    def walk_y() -> None:
        nonlocal y
        step = 1 if dy > y else -1
        while y != dy:
            y += step
            path.append(t.node_at(x, y))

    if order == "XY":
        walk_x()
        walk_y()
    else:
        walk_y()
        walk_x()
    return path
