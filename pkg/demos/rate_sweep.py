#!/usr/bin/env python3
"""Latency-throughput curves and saturation points, XY vs. planned routes.

Sweeps the injection rate on the edge-I/O mesh under uniform traffic and
prints the accepted-throughput / mean-latency curve per algorithm, then
estimates each saturation point. The planned bitmap routing sustains a
substantially higher rate than plain XY because it splits pairs between
the XY and YX routes against the predicted load.

This is a trimmed-down version of what `nocsim sweep` produces as CSV.
"""

from nocsim import build_mesh, compute_bitmaps, generate_pattern, run_nrank
from nocsim.metrics import build_report, saturation_throughput
from nocsim.simulator import SimConfig, run

topo = build_mesh(5, 5, "edge_only")
matrix = generate_pattern(topo, "uniform")
bitmaps = compute_bitmaps(topo, run_nrank(topo, matrix))

rates = [round(0.1 * k, 1) for k in range(1, 9)]
curves = {}
for algo in ("xy", "bidor"):
    print(f"--- {algo} ---")
    print("rate   accepted   mean_lat")
    curve = []
    for rate in rates:
        cfg = SimConfig(
            topology=topo,
            algorithm=algo,
            matrix=matrix,
            injection_rate=rate,
            warmup_cycles=500,
            measure_cycles=3000,
            drain_cycles=1000,
            bitmaps=bitmaps if algo == "bidor" else None,
        )
        report = build_report(run(cfg))
        curve.append((rate, report.accepted_throughput, report.mean_latency))
        print(f"{rate:4.2f}   {report.accepted_throughput:8.4f}   {report.mean_latency:8.2f}")
    curves[algo] = curve

sat_xy = saturation_throughput(curves["xy"])
sat_bd = saturation_throughput(curves["bidor"])
print(f"saturation: xy {sat_xy.rate:.2f} ({sat_xy.flag}), bidor {sat_bd.rate:.2f} ({sat_bd.flag})")
print(f"throughput gain: {sat_bd.rate / sat_xy.rate:.2f}x")
