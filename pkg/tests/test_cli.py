import numpy as np
import pytest

from nocsim.cli import main
from nocsim.config import ConfigError, load_config, parse_rates
from nocsim.bidor import import_bitmaps
from nocsim.nrank import load_weights
from nocsim.traffic import TraceEvent, save_trace


def rows_of(path):
    """CSV rows with the timestamp comment stripped."""
    return [line for line in path.read_text().splitlines() if not line.startswith("#")]


def test_defaults_and_overrides(tmp_path):
    cfg = load_config(None, ["sim.rate=0.25", "topology.io_mode=all_nodes"])
    assert cfg["sim.rate"] == 0.25
    assert cfg["topology.io_mode"] == "all_nodes"
    assert cfg["router.buffer_flits"] == 64
    assert cfg["nrank.w_th"] == 0.01

    f = tmp_path / "exp.cfg"
    f.write_text("# comment\nsim.rate = 0.3\nsweep.rates = 0.1,0.2  # inline\n")
    cfg = load_config(str(f), ["sim.rate=0.4"])
    assert cfg["sim.rate"] == 0.4  # override beats file
    assert cfg["sweep.rates"] == "0.1,0.2"


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unknown configuration key"):
        load_config(None, ["sim.rte=0.1"])
    f = tmp_path / "bad.cfg"
    f.write_text("simulator.rate = 0.1\n")
    with pytest.raises(ConfigError, match="unknown configuration key"):
        load_config(str(f), [])


def test_bad_values_rejected():
    with pytest.raises(ConfigError, match="cannot parse"):
        load_config(None, ["sim.seed=three"])
    with pytest.raises(ConfigError):
        load_config(None, ["sim.rate"])


def test_parse_rates():
    assert parse_rates("0.1,0.2,0.3") == [0.1, 0.2, 0.3]
    assert parse_rates("0.1:0.3:0.1") == [0.1, 0.2, 0.3]
    with pytest.raises(ConfigError):
        parse_rates("0.3:0.1:0.1")
    with pytest.raises(ConfigError):
        parse_rates("")


def test_cmd_nrank_writes_weights(tmp_path):
    rc = main(["nrank", "--out", str(tmp_path)])
    assert rc == 0
    w = load_weights(tmp_path / "nrank.csv")
    assert len(w) == 25
    conv = rows_of(tmp_path / "nrank_convergence.csv")
    assert conv[0] == "iteration,total_weight"
    assert len(conv) >= 2


def test_cmd_nrank_huge_threshold(tmp_path):
    rc = main(["nrank", "--set", "nrank.w_th=1e9", "--out", str(tmp_path)])
    assert rc == 0
    assert len(rows_of(tmp_path / "nrank_convergence.csv")) == 2  # header + 1 iteration


def test_cmd_nrank_missing_matrix_file(tmp_path):
    rc = main(["nrank", "--set", "traffic.matrix_file=/nonexistent.csv", "--out", str(tmp_path)])
    assert rc == 2


def test_cmd_bitmaps_roundtrip(tmp_path):
    rc = main(["bitmaps", "--out", str(tmp_path)])
    assert rc == 0
    bm = import_bitmaps(tmp_path / "bitmaps.txt", expected_nodes=25)
    assert bm.n_nodes == 25
    # uniform weights would give the all-zero bitmap; evolved weights flip some pairs
    assert any(b for row in bm.bits for b in row)


def test_cmd_bitmaps_matrix_file_pipeline(tmp_path):
    m = tmp_path / "m.csv"
    rows = [["0"] * 25 for _ in range(25)]
    rows[0][4] = "1"
    m.write_text("\n".join(",".join(r) for r in rows) + "\n")
    rc = main(["bitmaps", "--set", f"traffic.matrix_file={m}", "--out", str(tmp_path)])
    assert rc == 0
    bm = import_bitmaps(tmp_path / "bitmaps.txt")
    # same-row pairs always keep the XY bit regardless of the weight field
    assert bm.bits[0][4] == 0


def test_cmd_single_runs_and_reports(tmp_path):
    rc = main([
        "single", "--set", "sim.rate=0.1", "--set", "sim.warmup_cycles=100",
        "--set", "sim.measure_cycles=500", "--set", "sim.drain_cycles=200",
        "--out", str(tmp_path),
    ])
    assert rc == 0
    rows = rows_of(tmp_path / "single.csv")
    assert rows[0].startswith("algo,pattern,rate,seed")
    fields = rows[1].split(",")
    assert fields[0] == "xy" and fields[1] == "uniform"
    assert float(fields[4]) > 0  # accepted


def test_cmd_sweep_grid_and_determinism(tmp_path):
    args = [
        "sweep", "--set", "sweep.algorithms=xy,bidor", "--set", "sweep.rates=0.1,0.2",
        "--set", "sim.warmup_cycles=100", "--set", "sim.measure_cycles=500",
        "--set", "sim.drain_cycles=200", "--seeds", "1,2",
    ]
    rc = main(args + ["--out", str(tmp_path / "a")])
    assert rc == 0
    rows_a = rows_of(tmp_path / "a" / "results.csv")
    assert len(rows_a) == 1 + 2 * 2 * 2  # header + algos*rates*seeds
    rc = main(args + ["--out", str(tmp_path / "b"), "--jobs", "2"])
    assert rc == 0
    assert rows_a == rows_of(tmp_path / "b" / "results.csv")
    assert not (tmp_path / "a" / "failures.log").exists()


def test_cmd_sweep_rejects_unknown_algorithm(tmp_path):
    rc = main(["sweep", "--set", "sweep.algorithms=warp", "--out", str(tmp_path)])
    assert rc == 1


def test_cmd_replay_roundtrip(tmp_path):
    trace = tmp_path / "trace.csv"
    save_trace(trace, [TraceEvent(c, 0, 4, 4) for c in range(0, 200, 10)])
    rc = main([
        "replay", "--set", f"traffic.trace_file={trace}",
        "--set", "replay.window=100", "--out", str(tmp_path),
    ])
    assert rc == 0
    packets = rows_of(tmp_path / "replay_packets.csv")
    assert len(packets) == 1 + 20
    # single uncontended flow: every latency equals the pipeline value
    for row in packets[1:]:
        assert row.endswith(",12")  # 2*4 hops + 4 flits
    lcv_rows = rows_of(tmp_path / "replay_lcv.csv")
    assert lcv_rows[0] == "window_start,lcv"
    assert len(rows_of(tmp_path / "replay_reorder.csv")) >= 2
    summary = rows_of(tmp_path / "replay_summary.csv")[1].split(",")
    assert summary[0] == "xy" and summary[1] == "trace"


def test_cmd_replay_empty_trace_succeeds(tmp_path):
    trace = tmp_path / "empty.csv"
    save_trace(trace, [])
    rc = main(["replay", "--set", f"traffic.trace_file={trace}", "--out", str(tmp_path)])
    assert rc == 0
    assert len(rows_of(tmp_path / "replay_packets.csv")) == 1  # header only


def test_cmd_replay_same_row_flow_identical_under_xy_and_bidor(tmp_path):
    # s and d share a row: the candidate routes coincide, so latencies match
    trace = tmp_path / "row.csv"
    save_trace(trace, [TraceEvent(c, 0, 4, 4) for c in range(0, 300, 6)])
    outs = {}
    for algo in ("xy", "bidor"):
        out = tmp_path / algo
        rc = main(["replay", "--set", f"traffic.trace_file={trace}",
                   "--set", f"sim.algorithm={algo}", "--out", str(out)])
        assert rc == 0
        outs[algo] = rows_of(out / "replay_packets.csv")
    assert outs["xy"] == outs["bidor"]


def test_config_error_exit_code():
    assert main(["single", "--set", "bogus.key=1"]) == 1
    assert main(["replay"]) == 1  # replay needs traffic.trace_file
