"""Run configuration: TOML schema, defaults and validation.

A config file is flat TOML with two optional tables::

    network = "lattice"      # or "small_world"
    side = 50                # lattice only
    # n = 2500, k = 4, p = 0.2 for small_world
    lambda = 2.0
    mu = 2.4
    r = 2.0
    c = 1.0
    mode = "continuous"      # or "classic"
    kappa = 0.5
    p_r = 0.0
    max_steps = 10000
    tail_window = 500
    replicates = 10
    seed = 0
    out_dir = "results"

    [capture]
    timeseries = true
    snapshots = [0, 10, 100, 1000, 10000]
    payoff_steps = []
    queue_steps = []
    histogram_window = 4000
    edge_list = false

    [sweep]
    axis1 = { name = "r", start = 1.0, stop = 6.0, step = 0.1 }
    axis2 = { name = "mu", values = [2.0, 2.2, 2.4] }
"""
from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from .errors import ConfigError
from .evolution import Capture, EvolutionParams
from .payoff import CLASSIC, CONTINUOUS, GameParams
from .queueing import QueueParams
from .topology import LATTICE, SMALL_WORLD, NetworkTopology, make_lattice, make_small_world

SWEEP_PARAMETERS = ("r", "mu", "lambda", "p_r")
_PARAM_ALIASES = {"P_r": "p_r", "pr": "p_r", "lam": "lambda"}

_TOP_KEYS = {
    "network", "side", "n", "k", "p", "lambda", "mu", "r", "c", "mode", "kappa", "p_r",
    "max_steps", "tail_window", "replicates", "seed", "out_dir", "capture", "sweep",
}
_CAPTURE_KEYS = {"timeseries", "snapshots", "payoff_steps", "queue_steps", "histogram_window", "edge_list"}
_SWEEP_KEYS = {"axis1", "axis2", "replicates"}
_AXIS_KEYS = {"name", "values", "start", "stop", "step"}


@dataclass(frozen=True)
class TopologySpec:
    kind: str = LATTICE
    side: int = 50
    n: int = 2500
    k: int = 4
    p: float = 0.2

    @property
    def node_count(self) -> int:
        return self.side * self.side if self.kind == LATTICE else self.n

    def build(self, rng: Optional[np.random.Generator] = None) -> NetworkTopology:
        if self.kind == LATTICE:
            return make_lattice(self.side)
        if rng is None:
            raise ConfigError("a small-world network needs a random stream", field="network")
        return make_small_world(self.n, self.k, self.p, rng)


@dataclass(frozen=True)
class CaptureSpec:
    timeseries: bool = False
    snapshots: tuple[int, ...] = ()
    payoff_steps: tuple[int, ...] = ()
    queue_steps: tuple[int, ...] = ()
    histogram_window: int = 0
    edge_list: bool = False

    def for_run(self) -> Capture:
        return Capture(snapshot_steps=self.snapshots, payoff_steps=self.payoff_steps,
                       queue_steps=self.queue_steps)


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class SweepSpec:
    axis1: Axis
    axis2: Optional[Axis] = None
    replicates: Optional[int] = None

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.axis1.values), len(self.axis2.values) if self.axis2 else 1


@dataclass(frozen=True)
class SimConfig:
    topology: TopologySpec = field(default_factory=TopologySpec)
    lam: float = 2.0
    mu: float = 2.4
    r: float = 2.0
    c: float = 1.0
    mode: str = CONTINUOUS
    kappa: float = 0.5
    p_r: float = 0.0
    max_steps: int = 10_000
    tail_window: int = 500
    replicates: int = 10
    seed: int = 0
    out_dir: str = "results"
    capture: CaptureSpec = field(default_factory=CaptureSpec)
    sweep: Optional[SweepSpec] = None

    def __post_init__(self):
        validate(self)

    def queue_params(self) -> QueueParams:
        return QueueParams(self.lam, self.mu)

    def game_params(self) -> GameParams:
        return GameParams(r=self.r, c=self.c, mode=self.mode)

    def evolution_params(self) -> EvolutionParams:
        return EvolutionParams(kappa=self.kappa, p_r=self.p_r, max_steps=self.max_steps,
                               tail_window=self.tail_window)

    @property
    def node_count(self) -> int:
        return self.topology.node_count

    def with_param(self, name: str, value) -> "SimConfig":
        """Copy with one sweepable or scalar parameter changed."""
        name = _PARAM_ALIASES.get(name, name)
        attr = "lam" if name == "lambda" else name
        if attr not in {f.name for f in dataclasses.fields(self)}:
            raise ConfigError(f"unknown parameter {name!r}", field=name)
        return dataclasses.replace(self, **{attr: value})

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


def _positive(name, value):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value) or value <= 0:
        raise ConfigError(f"must be a positive number, got {value!r}", field=name)


def _probability(name, value):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not 0.0 <= value <= 1.0:
        raise ConfigError(f"must be a probability in [0, 1], got {value!r}", field=name)


def _integer(name, value, minimum):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < minimum:
        raise ConfigError(f"must be an integer >= {minimum}, got {value!r}", field=name)


def validate(cfg: SimConfig) -> None:
    topo = cfg.topology
    if topo.kind == LATTICE:
        _integer("side", topo.side, 2)
    elif topo.kind == SMALL_WORLD:
        _integer("k", topo.k, 2)
        if topo.k % 2:
            raise ConfigError(f"must be even, got {topo.k}", field="k")
        _integer("n", topo.n, topo.k + 1)
        _probability("p", topo.p)
    else:
        raise ConfigError(f"must be '{LATTICE}' or '{SMALL_WORLD}', got {topo.kind!r}", field="network")
    for name in ("lam", "mu", "r", "c", "kappa"):
        _positive("lambda" if name == "lam" else name, getattr(cfg, name))
    _probability("p_r", cfg.p_r)
    if cfg.mode not in (CLASSIC, CONTINUOUS):
        raise ConfigError(f"must be '{CLASSIC}' or '{CONTINUOUS}', got {cfg.mode!r}", field="mode")
    _integer("max_steps", cfg.max_steps, 0)
    _integer("tail_window", cfg.tail_window, 1)
    if cfg.max_steps and cfg.tail_window > cfg.max_steps:
        raise ConfigError(f"cannot exceed max_steps ({cfg.max_steps}), got {cfg.tail_window}",
                          field="tail_window")
    _integer("replicates", cfg.replicates, 1)
    _integer("seed", cfg.seed, 0)
    cap = cfg.capture
    for name in ("snapshots", "payoff_steps", "queue_steps"):
        for v in getattr(cap, name):
            _integer(f"capture.{name}", v, 0)
    _integer("capture.histogram_window", cap.histogram_window, 0)
    if cfg.sweep is not None:
        axes = [cfg.sweep.axis1] + ([cfg.sweep.axis2] if cfg.sweep.axis2 else [])
        for i, axis in enumerate(axes, 1):
            where = f"sweep.axis{i}"
            if axis.name not in SWEEP_PARAMETERS:
                raise ConfigError(f"parameter must be one of {SWEEP_PARAMETERS}, got {axis.name!r}", field=where)
            if not axis.values:
                raise ConfigError("needs at least one value", field=where)
            for v in axis.values:
                if axis.name == "p_r":
                    _probability(where, v)
                else:
                    _positive(where, v)
        if cfg.sweep.axis2 and cfg.sweep.axis2.name == cfg.sweep.axis1.name:
            raise ConfigError("both axes sweep the same parameter", field="sweep.axis2")
        if cfg.sweep.replicates is not None:
            _integer("sweep.replicates", cfg.sweep.replicates, 1)


def axis_values(spec: Mapping[str, Any], where: str = "axis") -> tuple[float, ...]:
    if "values" in spec:
        if any(k in spec for k in ("start", "stop", "step")):
            raise ConfigError("give either 'values' or 'start'/'stop'/'step'", field=where)
        vals = spec["values"]
        if not isinstance(vals, list):
            raise ConfigError("'values' must be a list", field=where)
        return tuple(float(v) for v in vals)
    try:
        start, stop, step = float(spec["start"]), float(spec["stop"]), float(spec["step"])
    except KeyError as exc:
        raise ConfigError(f"missing {exc.args[0]!r}", field=where) from None
    if step <= 0 or stop < start:
        raise ConfigError("need step > 0 and stop >= start", field=where)
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    # rounding keeps grid values such as 2.6000000000000001 printing as 2.6
    return tuple(round(start + i * step, 10) for i in range(count))


def parse_axis(text: str) -> Axis:
    """Parse a CLI axis: ``name=v1,v2,...`` or ``name=start:stop:step``."""
    if "=" not in text:
        raise ConfigError(f"axis must look like name=values, got {text!r}", field="axis")
    name, _, rest = text.partition("=")
    name = _PARAM_ALIASES.get(name.strip(), name.strip())
    try:
        if ":" in rest:
            start, stop, step = rest.split(":")
            vals = axis_values({"start": start, "stop": stop, "step": step}, where=name)
        else:
            vals = tuple(float(v) for v in rest.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"cannot parse axis values {rest!r}", field=name) from None
    return Axis(name=name, values=vals)


def _line_of(text: Optional[str], key: str) -> Optional[int]:
    if text is None:
        return None
    leaf = key.split(".")[-1]
    pat = re.compile(rf"^\s*{re.escape(leaf)}\s*=")
    for lineno, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return lineno
    return None


def _check_keys(mapping: Mapping, allowed: set, prefix: str, text, path):
    for key in mapping:
        if key not in allowed:
            full = f"{prefix}{key}"
            raise ConfigError("unknown key", field=full, line=_line_of(text, full), path=path)


def config_from_mapping(data: Mapping[str, Any], *, text: Optional[str] = None, path=None) -> SimConfig:
    """Build a validated ``SimConfig`` from parsed TOML data."""
    _check_keys(data, _TOP_KEYS, "", text, path)
    kind = data.get("network", LATTICE)
    topo = TopologySpec(
        kind=kind,
        side=data.get("side", 50),
        n=data.get("n", 2500),
        k=data.get("k", 4),
        p=float(data.get("p", 0.2)),
    )
    cap_data = data.get("capture", {})
    if not isinstance(cap_data, Mapping):
        raise ConfigError("must be a table", field="capture", line=_line_of(text, "capture"), path=path)
    _check_keys(cap_data, _CAPTURE_KEYS, "capture.", text, path)
    capture = CaptureSpec(
        timeseries=bool(cap_data.get("timeseries", False)),
        snapshots=tuple(cap_data.get("snapshots", ())),
        payoff_steps=tuple(cap_data.get("payoff_steps", ())),
        queue_steps=tuple(cap_data.get("queue_steps", ())),
        histogram_window=cap_data.get("histogram_window", 0),
        edge_list=bool(cap_data.get("edge_list", False)),
    )
    sweep = None
    if "sweep" in data:
        sw = data["sweep"]
        _check_keys(sw, _SWEEP_KEYS, "sweep.", text, path)
        axes = []
        for name in ("axis1", "axis2"):
            if name not in sw:
                continue
            spec = sw[name]
            if not isinstance(spec, Mapping) or "name" not in spec:
                raise ConfigError("must be a table with a 'name'", field=f"sweep.{name}",
                                  line=_line_of(text, f"sweep.{name}"), path=path)
            _check_keys(spec, _AXIS_KEYS, f"sweep.{name}.", text, path)
            pname = _PARAM_ALIASES.get(spec["name"], spec["name"])
            axes.append(Axis(name=pname, values=axis_values(spec, where=f"sweep.{name}")))
        if not axes or "axis1" not in sw:
            raise ConfigError("a sweep needs axis1", field="sweep", line=_line_of(text, "sweep"), path=path)
        sweep = SweepSpec(axis1=axes[0], axis2=axes[1] if len(axes) > 1 else None,
                          replicates=sw.get("replicates"))

    max_steps = data.get("max_steps", 10_000)
    default_tail = min(500, max_steps) if isinstance(max_steps, int) and max_steps > 0 else 500
    kwargs = dict(
        topology=topo,
        lam=data.get("lambda", 2.0),
        mu=data.get("mu", 2.4),
        r=data.get("r", 2.0),
        c=data.get("c", 1.0),
        mode=data.get("mode", CONTINUOUS),
        kappa=data.get("kappa", 0.5),
        p_r=data.get("p_r", 0.0),
        max_steps=max_steps,
        tail_window=data.get("tail_window", default_tail),
        replicates=data.get("replicates", 10),
        seed=data.get("seed", 0),
        out_dir=str(data.get("out_dir", "results")),
        capture=capture,
        sweep=sweep,
    )
    try:
        return SimConfig(**kwargs)
    except ConfigError as exc:
        line = _line_of(text, exc.field) if exc.field else None
        raise ConfigError(exc.message, field=exc.field, line=line, path=path) from None


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path=path) from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else None
        raise ConfigError(f"parse error: {exc}", line=line, path=path) from None
    return config_from_mapping(data, text=text, path=path)
