"""2D-mesh network-on-chip toolkit.

Two halves, usable independently:

* an offline route-planning library: an evolutionary node-ranking model
  (``nrank``) that turns a topology plus a traffic matrix into per-node
  long-term load weights, and a bitmap route selector (``bidor``) that
  picks between the XY and YX dimension-order routes per source/destination
  pair against those weights;

* a cycle-driven, flit-level wormhole simulator (``simulator``) with
  virtual channels and credit-based flow control, hosting deterministic,
  oblivious, and adaptive routing algorithms, plus the evaluation metrics
  (``metrics``) and an experiment CLI (``cli``).
"""

from nocsim.topology import Channel, Topology, build_mesh, dor_path, min_rect_contains
from nocsim.traffic import (
    TraceEvent,
    generate_pattern,
    load_matrix,
    load_trace,
    normalize,
    trace_matrix,
)
from nocsim.nrank import (
    ChannelProbabilities,
    NRankResult,
    possibility_weights,
    run_nrank,
    transition_probabilities,
)
from nocsim.bidor import (
    RouteBitmaps,
    compute_bitmaps,
    export_bitmaps,
    import_bitmaps,
    lookup,
    route_cost,
)
from nocsim.simulator import ALGORITHMS, SimConfig, SimResults, run
from nocsim.metrics import MetricsReport, build_report, lcv, reorder_trace, saturation_throughput

__all__ = [
    "ALGORITHMS",
    "Channel",
    "ChannelProbabilities",
    "MetricsReport",
    "NRankResult",
    "RouteBitmaps",
    "SimConfig",
    "SimResults",
    "Topology",
    "TraceEvent",
    "build_mesh",
    "build_report",
    "compute_bitmaps",
    "dor_path",
    "export_bitmaps",
    "generate_pattern",
    "import_bitmaps",
    "lcv",
    "load_matrix",
    "load_trace",
    "lookup",
    "min_rect_contains",
    "normalize",
    "possibility_weights",
    "reorder_trace",
    "route_cost",
    "run",
    "run_nrank",
    "saturation_throughput",
    "trace_matrix",
    "transition_probabilities",
]

__version__ = "0.1.0"
