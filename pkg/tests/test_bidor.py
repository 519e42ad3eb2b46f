import numpy as np
import pytest

from nocsim.bidor import (
    RouteBitmaps,
    compute_bitmaps,
    export_bitmaps,
    import_bitmaps,
    lookup,
    route_cost,
)
from nocsim.nrank import run_nrank
from nocsim.topology import build_mesh, dor_path
from nocsim.traffic import generate_pattern


def fig_weights():
    """Per-node weights on the 4x4 grid reproducing the reference 1.57/2.17 costs."""
    w = np.zeros(16)
    w[11], w[4] = 0.30, 0.27          # shared endpoints
    w[10], w[9], w[8] = 0.40, 0.30, 0.30   # XY interior, sums to 1.00
    w[7], w[6], w[5] = 0.60, 0.50, 0.50    # YX interior, sums to 1.60
    return w


def test_route_cost_reference_example():
    t = build_mesh(4, 4, "all_nodes")
    w = fig_weights()
    assert route_cost(dor_path(t, 11, 4, "XY"), w) == pytest.approx(1.57)
    assert route_cost(dor_path(t, 11, 4, "YX"), w) == pytest.approx(2.17)
    bm = compute_bitmaps(t, w)
    assert lookup(bm, 11, 4) == 0  # XY wins


def test_route_cost_single_node_path():
    assert route_cost([3], np.array([0, 0, 0, 0.3])) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        route_cost([], np.zeros(4))


def test_uniform_weights_give_all_xy():
    t = build_mesh(5, 5, "edge_only")
    bm = compute_bitmaps(t, np.ones(25))
    assert all(b == 0 for row in bm.bits for b in row)


def test_shared_row_or_column_always_xy():
    t = build_mesh(5, 5, "all_nodes")
    rng = np.random.default_rng(5)
    bm = compute_bitmaps(t, rng.random(25))
    for s in range(25):
        sx, sy = t.xy(s)
        for d in range(25):
            dx, dy = t.xy(d)
            if sx == dx or sy == dy:
                assert bm.bits[s][d] == 0


def test_scale_invariance_exact():
    t = build_mesh(5, 5, "edge_only")
    nr = run_nrank(t, generate_pattern(t, "uniform"))
    a = compute_bitmaps(t, nr)
    b = compute_bitmaps(t, nr.w_nr * 2.0)
    c = compute_bitmaps(t, nr.w_nr * 0.125)
    assert a == b == c


def test_endpoint_inclusion_never_changes_choice():
    t = build_mesh(5, 5, "all_nodes")
    rng = np.random.default_rng(11)
    w = rng.random(25)
    bm = compute_bitmaps(t, w)
    # interior-only costs (shared endpoints stripped) produce identical bitmaps
    rows = []
    for s in range(25):
        row = [0] * 25
        for d in range(25):
            if d == s:
                continue
            xy = dor_path(t, s, d, "XY")[1:-1]
            yx = dor_path(t, s, d, "YX")[1:-1]
            if sum(w[n] for n in yx) < sum(w[n] for n in xy):
                row[d] = 1
        rows.append(tuple(row))
    assert RouteBitmaps(bits=tuple(rows)) == bm


def test_hot_node_on_xy_path_flips_choice():
    t = build_mesh(5, 5, "all_nodes")
    w = np.ones(25) * 0.1
    s, d = 10, 4  # (0,2) -> (4,0)
    xy = dor_path(t, s, d, "XY")
    yx = dor_path(t, s, d, "YX")
    assert lookup(compute_bitmaps(t, w), s, d) == 0
    hot = next(n for n in xy if n not in yx)
    w[hot] = route_cost(yx, w) + 1.0
    assert lookup(compute_bitmaps(t, w), s, d) == 1


def test_lookup_contract():
    t = build_mesh(3, 3, "all_nodes")
    bm = compute_bitmaps(t, np.ones(9))
    assert lookup(bm, 0, 8) == lookup(bm, 0, 8)  # pure
    with pytest.raises(ValueError):
        lookup(bm, 3, 3)


def test_export_import_roundtrip(tmp_path):
    t = build_mesh(5, 5, "edge_only")
    nr = run_nrank(t, generate_pattern(t, "uniform"))
    bm = compute_bitmaps(t, nr)
    p = tmp_path / "bitmaps.txt"
    export_bitmaps(bm, p)
    lines = p.read_text().splitlines()
    assert len(lines) == 25 and all(len(line) == 25 for line in lines)
    assert import_bitmaps(p, expected_nodes=25) == bm


def test_import_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("010\n01\n001\n")
    with pytest.raises(ValueError, match="truncated or ragged"):
        import_bitmaps(p)
    p.write_text("01\n0x\n")
    with pytest.raises(ValueError, match="other than 0/1"):
        import_bitmaps(p)
    p.write_text("")
    with pytest.raises(ValueError, match="empty"):
        import_bitmaps(p)
    p.write_text("010\n010\n001\n")
    with pytest.raises(ValueError, match="topology has 25"):
        import_bitmaps(p, expected_nodes=25)


def test_bitmap_size_checked_against_weights():
    t = build_mesh(5, 5, "all_nodes")
    with pytest.raises(ValueError):
        compute_bitmaps(t, np.ones(9))
