"""Experiment runner CLI.

Subcommands: ``nrank`` (weight evolution to CSV), ``bitmaps`` (route
planning to a bitmap file), ``single`` (one simulation), ``sweep``
(algorithm x pattern x rate x seed grid), ``replay`` (trace replay).
Common flags: ``--config``, repeatable ``--set key=value``, ``--out``,
``--seeds``, ``--jobs``.

Exit codes: 0 success, 1 configuration error, 2 runtime error,
3 deadlock detected (single/replay).
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from nocsim import bidor, metrics, nrank, simulator, traffic
from nocsim.config import ConfigError, load_config, parse_list, parse_rates
from nocsim.topology import Topology, build_mesh

RESULT_HEADER = "algo,pattern,rate,seed,accepted,mean_lat,p99_lat,max_lat,lcv,reorder_peak"


def _timestamp() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _write_csv(path: Path, header: str, rows: list[str]) -> None:
    with open(path, "w") as f:
        f.write(f"# generated {_timestamp()}\n")
        f.write(header + "\n")
        for row in rows:
            f.write(row + "\n")


def _fmt(x: float) -> str:
    return "nan" if isinstance(x, float) and math.isnan(x) else f"{x:.6f}"


def build_topology(cfg: dict) -> Topology:
    return build_mesh(int(cfg["topology.width"]), int(cfg["topology.height"]), str(cfg["topology.io_mode"]))


def build_matrix(cfg: dict, t: Topology, pattern: str | None = None) -> tuple[str, np.ndarray]:
    """Traffic matrix from the configured file, or a synthesized pattern."""
    if pattern is None and cfg["traffic.matrix_file"]:
        m = traffic.load_matrix(str(cfg["traffic.matrix_file"]), expected_nodes=t.n_nodes)
        traffic.validate_matrix(t, m)
        return "matrix", m
    name = pattern or str(cfg["traffic.pattern"])
    return name, traffic.generate_pattern(t, name, int(cfg["traffic.seed"]))


def plan_bitmaps(cfg: dict, t: Topology, m: np.ndarray) -> bidor.RouteBitmaps:
    if cfg["bidor.bitmaps_file"]:
        return bidor.import_bitmaps(str(cfg["bidor.bitmaps_file"]), expected_nodes=t.n_nodes)
    result = nrank.run_nrank(t, m, float(cfg["nrank.w_th"]), int(cfg["nrank.iter_th"]))
    return bidor.compute_bitmaps(t, result)


def make_simconfig(
    cfg: dict,
    t: Topology,
    algo: str,
    *,
    matrix: np.ndarray | None = None,
    trace: list | None = None,
    rate: float | None = None,
    seed: int | None = None,
    bitmaps: bidor.RouteBitmaps | None = None,
    load_window: int | None = None,
) -> simulator.SimConfig:
    return simulator.SimConfig(
        topology=t,
        algorithm=algo,
        matrix=matrix,
        trace=trace,
        injection_rate=float(cfg["sim.rate"] if rate is None else rate),
        packet_flits=int(cfg["sim.packet_flits"]),
        warmup_cycles=int(cfg["sim.warmup_cycles"]),
        measure_cycles=int(cfg["sim.measure_cycles"]),
        drain_cycles=int(cfg["sim.drain_cycles"]),
        seed=int(cfg["sim.seed"] if seed is None else seed),
        buffer_flits=int(cfg["router.buffer_flits"]),
        vcs=int(cfg["router.vcs"]),
        hop_latency=int(cfg["router.hop_latency"]),
        stall_cycles=int(cfg["sim.stall_cycles"]),
        bitmaps=bitmaps,
        record_packets=trace is not None,
        load_window=load_window,
    )


def result_row(algo: str, pattern: str, rate: float, seed: int, report: metrics.MetricsReport) -> str:
    return ",".join(
        [
            algo,
            pattern,
            f"{rate:.6g}",
            str(seed),
            _fmt(report.accepted_throughput),
            _fmt(report.mean_latency),
            _fmt(report.p99_latency),
            _fmt(report.max_latency),
            _fmt(report.lcv),
            str(report.reorder_peak),
        ]
    )


# ----------------------------------------------------------------------
# subcommands

def cmd_nrank(cfg: dict, out: Path) -> int:
    t = build_topology(cfg)
    _, m = build_matrix(cfg, t)
    result = nrank.run_nrank(t, m, float(cfg["nrank.w_th"]), int(cfg["nrank.iter_th"]))
    nrank.save_weights(out / "nrank.csv", result)
    rows = [f"{i + 1},{r:.9f}" for i, r in enumerate(result.residual_history)]
    _write_csv(out / "nrank_convergence.csv", "iteration,total_weight", rows)
    print(
        f"nrank: {result.iterations} iterations, residual {result.residual:.6f}, "
        f"converged={result.converged}; wrote {out / 'nrank.csv'}"
    )
    return 0


def cmd_bitmaps(cfg: dict, out: Path) -> int:
    t = build_topology(cfg)
    _, m = build_matrix(cfg, t)
    bm = plan_bitmaps(cfg, t, m)
    path = out / "bitmaps.txt"
    bidor.export_bitmaps(bm, path)
    flipped = sum(sum(row) for row in bm.bits)
    print(f"bitmaps: {flipped} pairs routed YX; wrote {path}")
    return 0


def cmd_single(cfg: dict, out: Path) -> int:
    t = build_topology(cfg)
    pattern, m = build_matrix(cfg, t)
    algo = str(cfg["sim.algorithm"])
    bm = plan_bitmaps(cfg, t, m) if algo == "bidor" else None
    sim_cfg = make_simconfig(cfg, t, algo, matrix=m, bitmaps=bm)
    results = simulator.run(sim_cfg)
    report = metrics.build_report(results)
    row = result_row(algo, pattern, sim_cfg.injection_rate, sim_cfg.seed, report)
    _write_csv(out / "single.csv", RESULT_HEADER, [row])
    print(row)
    if results.deadlock:
        print("deadlock detected", file=sys.stderr)
        return 3
    return 0


def _sweep_cell(args) -> tuple[tuple, str, str | None]:
    """One sweep cell; returns (key, csv_row, error). Runs in a worker."""
    cfg, t, algo, pattern, m, rate, seed, bits = args
    key = (algo, pattern, rate, seed)
    try:
        bm = bidor.RouteBitmaps(bits=bits) if algo == "bidor" else None
        sim_cfg = make_simconfig(cfg, t, algo, matrix=m, rate=rate, seed=seed, bitmaps=bm)
        results = simulator.run(sim_cfg)
        report = metrics.build_report(results)
        row = result_row(algo, pattern, rate, seed, report)
        err = "deadlock" if results.deadlock else None
        return key, row, err
    except Exception as e:  # recorded, must not abort the sweep
        return key, "", f"{type(e).__name__}: {e}"


def cmd_sweep(cfg: dict, out: Path, seeds: list[int], jobs: int) -> int:
    t = build_topology(cfg)
    algorithms = parse_list(str(cfg["sweep.algorithms"]))
    patterns = parse_list(str(cfg["sweep.patterns"]))
    rates = parse_rates(str(cfg["sweep.rates"]))
    for algo in algorithms:
        if algo not in simulator.ALGORITHMS:
            raise ConfigError(f"unknown algorithm {algo!r} in sweep.algorithms")

    prepared: dict[str, tuple[np.ndarray, tuple | None]] = {}
    for pattern in patterns:
        _, m = build_matrix(cfg, t, pattern)
        bits = plan_bitmaps(cfg, t, m).bits if "bidor" in algorithms else None
        prepared[pattern] = (m, bits)

    cells = [
        (cfg, t, algo, pattern, prepared[pattern][0], rate, seed, prepared[pattern][1])
        for algo in algorithms
        for pattern in patterns
        for rate in rates
        for seed in seeds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_sweep_cell, cells))
    else:
        outcomes = [_sweep_cell(c) for c in cells]

    outcomes.sort(key=lambda o: o[0])
    rows = [row for _, row, _ in outcomes if row]
    failures = [f"{','.join(map(str, key))}: {err}" for key, _, err in outcomes if err]
    _write_csv(out / "results.csv", RESULT_HEADER, rows)
    if failures:
        with open(out / "failures.log", "w") as f:
            f.write("\n".join(failures) + "\n")
    print(f"sweep: {len(rows)} rows -> {out / 'results.csv'}; {len(failures)} failure(s)")
    return 0


def cmd_replay(cfg: dict, out: Path) -> int:
    t = build_topology(cfg)
    trace_file = str(cfg["traffic.trace_file"])
    if not trace_file:
        raise ConfigError("replay needs traffic.trace_file")
    events = traffic.load_trace(trace_file, n_nodes=t.n_nodes)
    algo = str(cfg["sim.algorithm"])
    bm = None
    if algo == "bidor":
        if events:
            m = traffic.trace_matrix(events, t.n_nodes)
        elif cfg["bidor.bitmaps_file"]:
            m = None
        else:
            raise ConfigError("empty trace: bidor needs bidor.bitmaps_file")
        bm = (
            bidor.import_bitmaps(str(cfg["bidor.bitmaps_file"]), expected_nodes=t.n_nodes)
            if cfg["bidor.bitmaps_file"]
            else plan_bitmaps(cfg, t, m)
        )
    window = int(cfg["replay.window"])
    sim_cfg = make_simconfig(cfg, t, algo, trace=events, bitmaps=bm, load_window=window)
    results = simulator.run(sim_cfg)
    report = metrics.build_report(results)

    packet_rows = [
        f"{pid},{src},{dst},{seq},{inj},{ej},{ej - inj}"
        for pid, src, dst, seq, inj, ej in sorted(results.packet_records or [])
    ]
    _write_csv(out / "replay_packets.csv", "packet_id,src,dst,seq,inject_cycle,eject_cycle,latency", packet_rows)
    lcv_rows = []
    for i, loads in enumerate(results.window_loads or []):
        active = [v for v in loads if v > 0]
        value = metrics.lcv(active) if active else math.nan
        lcv_rows.append(f"{i * window},{_fmt(value)}")
    _write_csv(out / "replay_lcv.csv", "window_start,lcv", lcv_rows)
    reorder_rows = [f"{c},{v}" for c, v in enumerate(results.reorder_series)]
    _write_csv(out / "replay_reorder.csv", "cycle,reorder_value", reorder_rows)
    _write_csv(out / "replay_summary.csv", RESULT_HEADER, [result_row(algo, "trace", 0.0, sim_cfg.seed, report)])
    print(
        f"replay: {len(packet_rows)} packets over {results.cycles} cycles, "
        f"mean latency {_fmt(report.mean_latency)}, reorder peak {report.reorder_peak}"
    )
    if results.deadlock:
        print("deadlock detected", file=sys.stderr)
        return 3
    return 0


# ----------------------------------------------------------------------

def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="nocsim", description="2D-mesh NoC routing experiments")
    parser.add_argument("command", choices=["nrank", "bitmaps", "single", "sweep", "replay"])
    parser.add_argument("--config", help="experiment config file (section.key = value lines)")
    parser.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seeds", help="comma-separated sweep seeds (default: sim.seed)")
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers for sweep")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, args.sets)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.seeds:
            seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
        else:
            seeds = [int(cfg["sim.seed"])]
        if args.command == "nrank":
            return cmd_nrank(cfg, out)
        if args.command == "bitmaps":
            return cmd_bitmaps(cfg, out)
        if args.command == "single":
            return cmd_single(cfg, out)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, seeds, args.jobs)
        return cmd_replay(cfg, out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
