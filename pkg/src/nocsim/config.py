"""Experiment configuration: flat ``section.key = value`` files plus overrides.

Every platform constant is a key with its standard value as the default,
so an empty config reproduces the reference setup (5x5 edge-I/O mesh,
64-flit port buffers over 2 VCs, 2-cycle hops). Unknown keys are rejected
to defend against silent typos in experiment definitions.
"""

from __future__ import annotations

DEFAULTS: dict[str, object] = {
    "topology.width": 5,
    "topology.height": 5,
    "topology.io_mode": "edge_only",
    "traffic.pattern": "uniform",
    "traffic.seed": 0,
    "traffic.matrix_file": "",
    "traffic.trace_file": "",
    "router.buffer_flits": 64,
    "router.vcs": 2,
    "router.hop_latency": 2,
    "sim.algorithm": "xy",
    "sim.rate": 0.1,
    "sim.packet_flits": 4,
    "sim.warmup_cycles": 1000,
    "sim.measure_cycles": 5000,
    "sim.drain_cycles": 2000,
    "sim.seed": 1,
    "sim.stall_cycles": 10_000,
    "nrank.w_th": 0.01,
    "nrank.iter_th": 100,
    "bidor.bitmaps_file": "",
    "metrics.latency_cap_factor": 10.0,
    "sweep.algorithms": "xy,yx,bidor,o1turn,romm,valiant,oddeven",
    "sweep.patterns": "uniform",
    "sweep.rates": "0.05:0.40:0.05",
    "replay.window": 1000,
}


class ConfigError(Exception):
    """Malformed configuration file, key, or value."""


def _convert(key: str, text: str) -> object:
    default = DEFAULTS[key]
    text = text.strip()
    try:
        if isinstance(default, bool):
            if text.lower() in ("true", "1", "yes"):
                return True
            if text.lower() in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {type(default).__name__}") from None
    return text


def apply_setting(cfg: dict[str, object], key: str, value: str) -> None:
    key = key.strip()
    if key not in DEFAULTS:
        raise ConfigError(f"unknown configuration key {key!r}")
    cfg[key] = _convert(key, value)


def load_config(path: str | None = None, overrides: list[str] | None = None) -> dict[str, object]:
    """Defaults, then the config file, then ``key=value`` overrides."""
    cfg = dict(DEFAULTS)
    if path:
        with open(path) as f:
            for lineno, raw in enumerate(f, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
                key, value = line.split("=", 1)
                try:
                    apply_setting(cfg, key, value)
                except ConfigError as e:
                    raise ConfigError(f"{path}:{lineno}: {e}") from None
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        apply_setting(cfg, key, value)
    return cfg


def parse_rates(spec: str) -> list[float]:
    """Rate list: ``a,b,c`` or an inclusive ``start:stop:step`` range."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"rate range must be start:stop:step, got {spec!r}")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"cannot parse rate range {spec!r}") from None
        if step <= 0 or stop < start:
            raise ConfigError(f"bad rate range {spec!r}")
        rates = []
        k = 0
        while True:
            r = round(start + k * step, 10)
            if r > stop + 1e-12:
                break
            rates.append(r)
            k += 1
        return rates
    try:
        rates = [float(p) for p in spec.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse rate list {spec!r}") from None
    if not rates:
        raise ConfigError("empty rate list")
    return rates


def parse_list(spec: str) -> list[str]:
    return [p.strip() for p in spec.split(",") if p.strip()]
