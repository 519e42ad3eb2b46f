"""Cycle-driven, flit-level 2D-mesh simulator.

Router model: input-queued wormhole routers with 2 virtual channels per
input port, credit-based flow control, and a 5-port crossbar (four mesh
directions plus local injection/ejection). Each hop costs 2 cycles for an
uncontended flit: one cycle of logic (routing plus switch allocation) and
one cycle of channel traversal. Switch allocation grants at most one flit
per output port and one per input port per cycle, with round-robin
priority across input VCs. A head flit claims an output VC for its whole
packet; the claim is released when the tail passes, which keeps packets
contiguous in every downstream VC FIFO.

Timing convention: a flit granted at cycle t leaves its input buffer at t,
spends t+1 on the wire, and is allocatable downstream from t+2 (for the
default hop latency of 2). Moving a flit from the per-node source queue
into the local router's injection VC is free, so a packet of F flits over
h hops finishes, uncontended, exactly 2h + F cycles after it entered the
source queue. Latency is measured from source-queue entry, which makes
saturation visible as the knee of the latency curve.

Routing algorithms and their VC discipline:

    xy, yx    deterministic dimension order; VC fixed per flow, (s+d) % 2
    bidor     per-pair bitmap chooses XY (VC0) or YX (VC1) at the source
    o1turn    uniform per-packet coin between XY (VC0) and YX (VC1)
    romm      random intermediate inside the minimum rectangle; XY to it
              on VC0, then XY to the destination on VC1
    valiant   like romm but the intermediate is anywhere in the mesh
    oddeven   minimal adaptive next hops restricted by odd-even turn
              rules; picks the admissible output (and VC) with the most
              free downstream credits, ties toward the X dimension
"""

from __future__ import annotations

import random
from bisect import bisect_left
from collections import deque
from dataclasses import dataclass

import numpy as np

from nocsim.bidor import RouteBitmaps
from nocsim.topology import Topology
from nocsim.traffic import TraceEvent, validate_matrix

ALGORITHMS = ("xy", "yx", "bidor", "o1turn", "romm", "valiant", "oddeven")

# output/input port indices; 0..3 are mesh directions, 4 is local
PX, MX, PY, MY, EJECT = 0, 1, 2, 3, 4
INJECT = 4
_OPPOSITE = (MX, PX, MY, PY)

# flit kind bit flags
HEAD = 1
TAIL = 2


class Flit:
    __slots__ = (
        "pid", "kind", "src", "dst", "seq", "size", "vc0",
        "route_kind", "inter", "phase2", "inject_cycle", "usable_from",
    )

    def __init__(self, pid, kind, src, dst, seq, size, vc0, route_kind, inter, inject_cycle):
        self.pid = pid
        self.kind = kind
        self.src = src
        self.dst = dst
        self.seq = seq
        self.size = size
        self.vc0 = vc0
        self.route_kind = route_kind
        self.inter = inter
        self.phase2 = False
        self.inject_cycle = inject_cycle
        self.usable_from = 0


class Router:
    __slots__ = ("node", "x", "y", "in_q", "latch", "credit", "owner", "rr", "out_link", "in_from")

    def __init__(self, node: int, x: int, y: int):
        self.node = node
        self.x = x
        self.y = y
        self.in_q = [deque() for _ in range(10)]  # input slot = port*2 + vc
        self.latch = [None] * 10                  # (out_port, out_vc, pid) while a packet streams
        self.credit = [0] * 10                    # slot = out_port*2 + vc, mesh ports only
        self.owner = [None] * 10                  # slot = out_port*2 + vc, incl. ejection lanes
        self.rr = [0] * 5                         # round-robin pointer per output port
        self.out_link = [None] * 4                # out port -> (neighbor router id, its input port)
        self.in_from = [None] * 4                 # input port -> (neighbor router id, its out port)


@dataclass
class SimConfig:
    """One simulation run: platform constants, traffic source, and phases."""

    topology: Topology
    algorithm: str
    matrix: np.ndarray | None = None
    trace: list[TraceEvent] | None = None
    injection_rate: float = 0.1       # offered load, flits per I/O node per cycle
    packet_flits: int = 4
    warmup_cycles: int = 1000
    measure_cycles: int = 5000
    drain_cycles: int = 2000
    seed: int = 1
    buffer_flits: int = 64            # per input port, shared by the VCs
    vcs: int = 2
    hop_latency: int = 2
    stall_cycles: int = 10_000        # no-movement window that flags deadlock
    bitmaps: RouteBitmaps | None = None
    check_invariants: bool = False
    record_flit_events: bool = False
    record_packets: bool = False
    load_window: int | None = None    # per-window per-node load capture (trace replay)

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if (self.matrix is None) == (self.trace is None):
            raise ValueError("exactly one of matrix or trace must be given")
        if self.matrix is not None:
            validate_matrix(self.topology, self.matrix)
            # rate 0 is allowed as the degenerate idle source
            if not (0.0 <= self.injection_rate <= 1.0):
                raise ValueError("injection rate must be in (0, 1]")
        if self.packet_flits < 1:
            raise ValueError("packet size must be >= 1 flit")
        if self.vcs != 2:
            raise ValueError("router model requires exactly 2 virtual channels")
        if self.buffer_flits < self.vcs or self.buffer_flits % self.vcs:
            raise ValueError("buffer_flits must be a positive multiple of vcs")
        if self.hop_latency < 1:
            raise ValueError("hop latency must be >= 1 cycle")
        if self.algorithm == "bidor":
            if self.bitmaps is None:
                raise ValueError("bidor needs route bitmaps")
            if self.bitmaps.n_nodes != self.topology.n_nodes:
                raise ValueError("bitmap size does not match topology")
        if self.trace is not None:
            io = self.topology.io_nodes
            n = self.topology.n_nodes
            for ev in self.trace:
                if not (0 <= ev.src < n and 0 <= ev.dst < n):
                    raise ValueError(f"trace node id out of range: {ev}")
                if ev.src not in io or ev.dst not in io:
                    raise ValueError(f"trace endpoints must be I/O nodes: {ev}")


@dataclass
class SimResults:
    algorithm: str
    seed: int
    cycles: int
    latencies: list[int]
    per_node_forwarded: list[int]
    measure_cycles: int
    accepted_throughput: float
    reorder_series: list[int]
    reorder_peak: int
    deadlock: bool
    injected_packets: int
    injected_flits: int
    ejected_flits: int
    ejected_flits_measured: int
    unfinished_tagged: int
    flit_events: list[tuple] | None = None
    packet_records: list[tuple] | None = None
    window_loads: list[list[int]] | None = None


class _ReorderTracker:
    """Virtual destination-side reorder buffers, tracked online.

    A flit whose flow still has an earlier-sequence packet not fully
    ejected is held; held flits release once every earlier packet of the
    flow has fully ejected. Occupancy is counted in flits per destination.
    """

    __slots__ = ("flows", "held", "peak")

    def __init__(self, n_nodes: int):
        self.flows: dict[tuple[int, int], list] = {}  # (src, dst) -> [next_seq, {seq: [got, size, held]}]
        self.held = [0] * n_nodes
        self.peak = 0

    def eject(self, src: int, dst: int, seq: int, size: int) -> None:
        flow = self.flows.get((src, dst))
        if flow is None:
            flow = [0, {}]
            self.flows[(src, dst)] = flow
        next_seq, entries = flow
        e = entries.get(seq)
        if e is None:
            e = [0, size, 0]
            entries[seq] = e
        e[0] += 1
        if seq > next_seq:
            e[2] += 1
            self.held[dst] += 1
        advanced = False
        while True:
            front = entries.get(flow[0])
            if front is None or front[0] < front[1]:
                break
            self.held[dst] -= front[2]
            del entries[flow[0]]
            flow[0] += 1
            advanced = True
        if advanced:
            front = entries.get(flow[0])
            if front is not None and front[2]:
                self.held[dst] -= front[2]
                front[2] = 0

    def value(self) -> int:
        v = max(self.held)
        if v > self.peak:
            self.peak = v
        return v


class Simulation:
    """A single deterministic simulation instance (single-threaded)."""

    def __init__(self, config: SimConfig):
        config.validate()
        self.config = config
        t = config.topology
        self.topology = t
        n = t.n_nodes
        self.cap_vc = config.buffer_flits // config.vcs
        self.algo = config.algorithm
        self.cycle = 0

        self.routers = [Router(i, *t.xy(i)) for i in range(n)]
        for r in self.routers:
            for port, (dx, dy) in enumerate(((1, 0), (-1, 0), (0, 1), (0, -1))):
                nx, ny = r.x + dx, r.y + dy
                if 0 <= nx < t.width and 0 <= ny < t.height:
                    nid = t.node_at(nx, ny)
                    r.out_link[port] = (nid, _OPPOSITE[port])
                    r.credit[port * 2] = self.cap_vc
                    r.credit[port * 2 + 1] = self.cap_vc
        for r in self.routers:
            for port in range(4):
                link = r.out_link[port]
                if link is not None:
                    self.routers[link[0]].in_from[link[1]] = (r.node, port)

        # traffic source
        self.inj_q: list[deque] = [deque() for _ in range(n)]
        self.inj_vc_current = [0] * n  # injection VC of the packet currently transferring
        self.rng_traffic = random.Random(config.seed)
        self.rng_route = random.Random(config.seed ^ 0x5DEECE66D)
        self._next_pid = 0
        self._flow_seq: dict[tuple[int, int], int] = {}
        if config.matrix is not None:
            self._p_packet = config.injection_rate / config.packet_flits
            self._sources = []
            for s in sorted(t.io_nodes):
                row = config.matrix[s]
                total = row.sum()
                if total <= 0:
                    continue
                dests, cdf, acc = [], [], 0.0
                for d, v in enumerate(row):
                    if v > 0:
                        acc += v / total
                        dests.append(d)
                        cdf.append(acc)
                cdf[-1] = 1.0
                self._sources.append((s, dests, cdf))
            self._trace = None
        else:
            self._sources = []
            self._trace = config.trace
            self._trace_pos = 0

        # measurement state
        self._tag_lo = config.warmup_cycles
        self._tag_hi = config.warmup_cycles + config.measure_cycles
        if self._trace is not None:
            self._tag_lo, self._tag_hi = 0, 1 << 62
        self.latencies: list[int] = []
        self.forwarded = [0] * n
        self.created_flits = 0
        self.created_packets = 0
        self.ejected_flits = 0
        self.ejected_flits_measured = 0
        self.completed_packets = 0
        self.tagged_injected = 0
        self.tagged_completed = 0
        self.in_network = 0
        self.reorder = _ReorderTracker(n)
        self.reorder_series: list[int] = []
        self.deadlock = False
        self.last_progress = 0
        self.flit_events: list[tuple] | None = [] if config.record_flit_events else None
        self.packet_records: list[tuple] | None = [] if config.record_packets else None
        self.window_loads: list[list[int]] | None = [] if config.load_window else None
        self._packet_eject_count: dict[int, int] = {}
        # wormhole stream expectation per (router, input slot), and per ejection lane
        self._stream: dict[tuple[int, int], tuple[int, int]] | None = (
            {} if config.check_invariants else None
        )
        self._grants: list = []

    # ------------------------------------------------------------------
    # traffic generation

    def _new_packet(self, cycle: int, s: int, d: int, size: int) -> None:
        pid = self._next_pid
        self._next_pid += 1
        seq = self._flow_seq.get((s, d), 0)
        self._flow_seq[(s, d)] = seq + 1
        vc0, route_kind, inter = self._plan(s, d)
        q = self.inj_q[s]
        last = size - 1
        for i in range(size):
            kind = (HEAD if i == 0 else 0) | (TAIL if i == last else 0)
            f = Flit(pid, kind, s, d, seq, size, vc0, route_kind, inter, cycle)
            if i == 0 and inter == s:
                f.phase2 = True
            q.append(f)
        self.created_packets += 1
        self.created_flits += size
        if self._tag_lo <= cycle < self._tag_hi:
            self.tagged_injected += 1

    def _plan(self, s: int, d: int) -> tuple[int, int, int]:
        """Source routing decision: (injection vc, dimension order, intermediate)."""
        algo = self.algo
        if algo == "xy":
            return (s + d) % 2, 0, -1
        if algo == "yx":
            return (s + d) % 2, 1, -1
        if algo == "bidor":
            b = self.config.bitmaps.bits[s][d]
            return b, b, -1
        if algo == "o1turn":
            b = self.rng_route.getrandbits(1)
            return b, b, -1
        if algo == "romm":
            t = self.topology
            sx, sy = t.xy(s)
            dx, dy = t.xy(d)
            ix = self.rng_route.randint(min(sx, dx), max(sx, dx))
            iy = self.rng_route.randint(min(sy, dy), max(sy, dy))
            inter = t.node_at(ix, iy)
            return (1 if inter == s else 0), 0, inter
        if algo == "valiant":
            inter = self.rng_route.randrange(self.topology.n_nodes)
            return (1 if inter == s else 0), 0, inter
        return -1, 0, -1  # oddeven: injection VC picked at transfer time

    def _generate(self, cycle: int) -> None:
        if self._trace is None:
            p = self._p_packet
            rng = self.rng_traffic
            size = self.config.packet_flits
            for s, dests, cdf in self._sources:
                if rng.random() < p:
                    d = dests[bisect_left(cdf, rng.random())]
                    self._new_packet(cycle, s, d, size)
        else:
            trace = self._trace
            pos = self._trace_pos
            while pos < len(trace) and trace[pos].cycle <= cycle:
                ev = trace[pos]
                self._new_packet(cycle, ev.src, ev.dst, ev.flits)
                pos += 1
            self._trace_pos = pos

    def _inject(self, cycle: int) -> None:
        cap = self.cap_vc
        for node, q in enumerate(self.inj_q):
            if not q:
                continue
            f = q[0]
            if f.kind & HEAD:
                vc = f.vc0
                if vc < 0:  # adaptive: pick the emptier injection VC
                    r = self.routers[node]
                    vc = 0 if len(r.in_q[INJECT * 2]) <= len(r.in_q[INJECT * 2 + 1]) else 1
                self.inj_vc_current[node] = vc
            else:
                vc = self.inj_vc_current[node]
            buf = self.routers[node].in_q[INJECT * 2 + vc]
            if len(buf) < cap:
                q.popleft()
                f.usable_from = cycle
                buf.append(f)
                self.in_network += 1
                self.last_progress = cycle

    # ------------------------------------------------------------------
    # routing

    def route_next(self, router: Router, flit: Flit, in_vc: int) -> tuple[int, int]:
        """Output port and VC class for a head flit at this router."""
        node = router.node
        if node == flit.dst:
            return EJECT, in_vc
        algo = self.algo
        if algo == "oddeven":
            return self._route_oddeven(router, flit)
        if flit.inter >= 0:  # romm / valiant two-phase
            if flit.phase2 or node == flit.inter:
                flit.phase2 = True
                return self._dor_hop(router, flit.dst, 0), 1
            return self._dor_hop(router, flit.inter, 0), 0
        return self._dor_hop(router, flit.dst, flit.route_kind), flit.vc0

    def _dor_hop(self, router: Router, target: int, order: int) -> int:
        tx, ty = self.topology.xy(target)
        if order == 0:  # XY
            if router.x != tx:
                return PX if tx > router.x else MX
            return PY if ty > router.y else MY
        if router.y != ty:
            return PY if ty > router.y else MY
        return PX if tx > router.x else MX

    def _route_oddeven(self, router: Router, flit: Flit) -> tuple[int, int]:
        cx, cy = router.x, router.y
        dx, dy = self.topology.xy(flit.dst)
        e0, e1 = dx - cx, dy - cy
        dirs: list[int] = []
        if e0 == 0:
            dirs.append(PY if e1 > 0 else MY)
        elif e0 > 0:
            if e1 == 0:
                dirs.append(PX)
            else:
                if dx % 2 == 1 or e0 != 1:
                    dirs.append(PX)
                sx = flit.src % self.topology.width
                if cx % 2 == 1 or cx == sx:
                    dirs.append(PY if e1 > 0 else MY)
        else:
            dirs.append(MX)
            if cx % 2 == 0:
                dirs.append(PY if e1 > 0 else MY)
        credit = router.credit
        best_port, best_free = dirs[0], -1
        for port in dirs:  # X-dimension ports listed first; strict > keeps them on ties
            free = credit[port * 2] + credit[port * 2 + 1]
            if free > best_free:
                best_port, best_free = port, free
        vc = 0 if credit[best_port * 2] >= credit[best_port * 2 + 1] else 1
        return best_port, vc

    # ------------------------------------------------------------------
    # switch allocation

    def _allocate(self, cycle: int) -> list:
        grants = self._grants
        grants.clear()
        for r in self.routers:
            reqs: list[list] = [[], [], [], [], []]
            any_req = False
            for slot in range(10):
                q = r.in_q[slot]
                if not q:
                    continue
                f = q[0]
                if f.usable_from > cycle:
                    continue
                latch = r.latch[slot]
                if latch is not None and latch[2] == f.pid:
                    op, ov = latch[0], latch[1]
                else:
                    op, ov = self.route_next(r, f, slot & 1)
                reqs[op].append((slot, f, ov))
                any_req = True
            if not any_req:
                continue
            used_inports = 0
            for op in range(5):
                cands = reqs[op]
                if not cands:
                    continue
                start = r.rr[op]
                pick = None
                for wrap in (False, True):
                    for cand in cands:
                        slot = cand[0]
                        if (slot < start) if not wrap else (slot >= start):
                            continue
                        if used_inports & (1 << (slot >> 1)):
                            continue
                        f, ov = cand[1], cand[2]
                        lane = op * 2 + ov
                        owner = r.owner[lane]
                        if f.kind & HEAD:
                            if owner is not None:
                                continue
                        elif owner != f.pid:
                            continue
                        if op != EJECT and r.credit[lane] <= 0:
                            continue
                        pick = cand
                        break
                    if pick is not None:
                        break
                if pick is not None:
                    used_inports |= 1 << (pick[0] >> 1)
                    r.rr[op] = (pick[0] + 1) % 10
                    grants.append((r, pick[0], pick[1], op, pick[2]))
        return grants

    def _commit(self, grants: list, cycle: int) -> None:
        routers = self.routers
        measuring = self._tag_lo <= cycle < self._tag_hi
        hop = self.config.hop_latency
        window = self.config.load_window
        for r, slot, f, op, ov in grants:
            popped = r.in_q[slot].popleft()
            assert popped is f
            lane = op * 2 + ov
            kind = f.kind
            if kind & TAIL:
                r.owner[lane] = None
                r.latch[slot] = None
            elif kind & HEAD:
                r.owner[lane] = f.pid
                r.latch[slot] = (op, ov, f.pid)
            if measuring:
                self.forwarded[r.node] += 1
            if window:
                idx = cycle // window
                wl = self.window_loads
                while len(wl) <= idx:
                    wl.append([0] * len(routers))
                wl[idx][r.node] += 1
            in_port = slot >> 1
            if in_port != INJECT:
                u_node, u_port = r.in_from[in_port]
                routers[u_node].credit[u_port * 2 + (slot & 1)] += 1
            if op == EJECT:
                self._eject(f, cycle + 1, ov)
            else:
                r.credit[lane] -= 1
                nid, nport = r.out_link[op]
                f.usable_from = cycle + hop
                dest_q = routers[nid].in_q[nport * 2 + ov]
                if self._stream is not None:
                    self._check_stream((nid, nport * 2 + ov), f)
                dest_q.append(f)
        if grants:
            self.last_progress = cycle

    def _eject(self, f: Flit, eject_cycle: int, lane_vc: int) -> None:
        self.in_network -= 1
        self.ejected_flits += 1
        if self._tag_lo <= eject_cycle < self._tag_hi:
            self.ejected_flits_measured += 1
        if self._stream is not None:
            self._check_stream((-1 - f.dst, lane_vc), f)
        self.reorder.eject(f.src, f.dst, f.seq, f.size)
        if self.flit_events is not None:
            self.flit_events.append((eject_cycle, f.src, f.dst, f.seq, f.size))
        got = self._packet_eject_count.get(f.pid, 0) + 1
        if got == f.size:
            self._packet_eject_count.pop(f.pid, None)
            self.completed_packets += 1
            if self._tag_lo <= f.inject_cycle < self._tag_hi:
                self.tagged_completed += 1
                self.latencies.append(eject_cycle - f.inject_cycle)
                if self.packet_records is not None:
                    self.packet_records.append(
                        (f.pid, f.src, f.dst, f.seq, f.inject_cycle, eject_cycle)
                    )
        else:
            self._packet_eject_count[f.pid] = got

    def _check_stream(self, key: tuple, f: Flit) -> None:
        # packets must stay contiguous and in flit order on every VC lane
        cur = self._stream.get(key)
        if cur is None:
            if not f.kind & HEAD:
                raise AssertionError(f"wormhole break: non-head flit starts a stream on {key}")
        elif cur != f.pid:
            raise AssertionError(f"wormhole break: packet {f.pid} interleaves {cur} on {key}")
        self._stream[key] = None if f.kind & TAIL else f.pid

    # ------------------------------------------------------------------
    # invariants (enabled by config.check_invariants)

    def check_invariants(self) -> None:
        in_buffers = 0
        for r in self.routers:
            for slot in range(10):
                qlen = len(r.in_q[slot])
                if qlen > self.cap_vc:
                    raise AssertionError(f"VC overflow at router {r.node} slot {slot}: {qlen}")
                in_buffers += qlen
        queued = sum(len(q) for q in self.inj_q)
        if queued + in_buffers + self.ejected_flits != self.created_flits:
            raise AssertionError(
                f"flit conservation broken: {queued}+{in_buffers}+{self.ejected_flits} "
                f"!= {self.created_flits}"
            )
        if in_buffers != self.in_network:
            raise AssertionError("in-network counter out of sync")
        for r in self.routers:
            for port in range(4):
                link = r.out_link[port]
                if link is None:
                    continue
                nid, nport = link
                for vc in range(2):
                    credit = r.credit[port * 2 + vc]
                    occ = len(self.routers[nid].in_q[nport * 2 + vc])
                    if credit < 0 or credit + occ != self.cap_vc:
                        raise AssertionError(
                            f"credit mismatch on {r.node}->{nid} vc{vc}: credit {credit}, occupancy {occ}"
                        )

    # ------------------------------------------------------------------
    # main loop

    def step(self) -> None:
        """Advance the simulation by one cycle."""
        cycle = self.cycle
        self._generate(cycle)
        self._inject(cycle)
        grants = self._allocate(cycle)
        self._commit(grants, cycle)
        self.reorder_series.append(self.reorder.value())
        if self.config.check_invariants:
            self.check_invariants()
        if (
            self.in_network > 0
            and cycle - self.last_progress >= self.config.stall_cycles
        ):
            self.deadlock = True
        self.cycle = cycle + 1

    def run(self) -> SimResults:
        cfg = self.config
        if self._trace is None:
            end = cfg.warmup_cycles + cfg.measure_cycles + cfg.drain_cycles
            while self.cycle < end and not self.deadlock:
                self.step()
            measure_cycles = cfg.measure_cycles
        else:
            while not self.deadlock:
                self.step()
                if (
                    self._trace_pos >= len(self._trace)
                    and self.completed_packets == self.created_packets
                ):
                    break
            measure_cycles = max(self.cycle, 1)
        io_count = len(self.topology.io_nodes)
        accepted = self.ejected_flits_measured / (io_count * measure_cycles)
        return SimResults(
            algorithm=cfg.algorithm,
            seed=cfg.seed,
            cycles=self.cycle,
            latencies=self.latencies,
            per_node_forwarded=self.forwarded,
            measure_cycles=measure_cycles,
            accepted_throughput=accepted,
            reorder_series=self.reorder_series,
            reorder_peak=self.reorder.peak,
            deadlock=self.deadlock,
            injected_packets=self.created_packets,
            injected_flits=self.created_flits,
            ejected_flits=self.ejected_flits,
            ejected_flits_measured=self.ejected_flits_measured,
            unfinished_tagged=self.tagged_injected - self.tagged_completed,
            flit_events=self.flit_events,
            packet_records=self.packet_records,
            window_loads=self.window_loads,
        )


def run(config: SimConfig) -> SimResults:
    """Run one simulation to completion; deterministic for a given seed."""
    return Simulation(config).run()
