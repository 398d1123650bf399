"""Heterogeneous 2D-mesh NoC: nodes, flows, XY routing, config I/O.

A *node* is a (router, output port) pair.  The grid has ``y`` growing
northward, so the ``N`` output of router (x, y) feeds router (x, y + 1).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

from .netcalc import ArrivalCurve, to_fraction

__all__ = [
    "PORTS",
    "NodeId",
    "NodeParams",
    "NocModel",
    "Flow",
    "Config",
    "Violation",
    "OutOfGrid",
    "ConfigError",
    "xy_route",
    "port_name",
    "validate",
    "base_latency",
    "load_config",
    "config_from_dict",
    "config_to_dict",
    "save_config",
]

PORTS = ("N", "S", "E", "W", "L")
_STEP = {"N": (0, 1), "S": (0, -1), "E": (1, 0), "W": (-1, 0)}
OPPOSITE = {"N": "S", "S": "N", "E": "W", "W": "E"}
_PORT_ALIASES = {"north": "N", "south": "S", "east": "E", "west": "W", "local": "L"}


def port_name(p: str) -> str:
    """Normalise 'North'/'local'/'n' style port spellings to one letter."""
    q = str(p).strip()
    out = _PORT_ALIASES.get(q.lower(), q.upper())
    if out not in PORTS:
        raise ValueError(f"unknown port {p!r}")
    return out


class OutOfGrid(ValueError):
    pass


class ConfigError(ValueError):
    """Raised when a config document cannot be turned into a model."""


class NodeId(NamedTuple):
    x: int
    y: int
    port: str

    @property
    def router(self) -> tuple[int, int]:
        return (self.x, self.y)

    def next_router(self) -> tuple[int, int] | None:
        if self.port == "L":
            return None
        dx, dy = _STEP[self.port]
        return (self.x + dx, self.y + dy)

    def __str__(self) -> str:
        return f"({self.x},{self.y},{self.port})"


@dataclass(frozen=True)
class NodeParams:
    rate: Fraction = Fraction(1)
    latency: Fraction = Fraction(1)
    buffer: int = 1

    def __post_init__(self):
        object.__setattr__(self, "rate", to_fraction(self.rate))
        object.__setattr__(self, "latency", to_fraction(self.latency))
        if self.rate <= 0:
            raise ConfigError(f"node rate must be > 0, got {self.rate}")
        if self.latency < 0:
            raise ConfigError(f"node latency must be >= 0, got {self.latency}")
        if int(self.buffer) != self.buffer or self.buffer < 1:
            raise ConfigError(f"buffer must be an integer >= 1, got {self.buffer}")
        object.__setattr__(self, "buffer", int(self.buffer))


@dataclass(frozen=True)
class NocModel:
    width: int
    height: int
    default: NodeParams = field(default_factory=NodeParams)
    overrides: Mapping[NodeId, NodeParams] = field(default_factory=dict)
    flit_size: Fraction = Fraction(1)
    vc_count: int = 1

    def __post_init__(self):
        object.__setattr__(self, "flit_size", to_fraction(self.flit_size))
        object.__setattr__(self, "overrides", dict(self.overrides))
        if self.width < 1 or self.height < 1:
            raise ConfigError("mesh needs width, height >= 1")
        if self.vc_count < 1:
            raise ConfigError("vc_count must be >= 1")
        for n in self.overrides:
            if not self.in_grid(n):
                raise OutOfGrid(f"override for node {n} outside {self.width}x{self.height} grid")

    def in_grid(self, node) -> bool:
        x, y = node[0], node[1]
        return 0 <= x < self.width and 0 <= y < self.height

    def params(self, node: NodeId) -> NodeParams:
        return self.overrides.get(node, self.default)

    def with_buffer(self, buffer: int) -> "NocModel":
        """Same platform with every buffer (default and overrides) set to ``buffer``."""
        ov = {n: NodeParams(p.rate, p.latency, buffer) for n, p in self.overrides.items()}
        d = self.default
        return NocModel(self.width, self.height, NodeParams(d.rate, d.latency, buffer), ov,
                        self.flit_size, self.vc_count)


@dataclass(frozen=True)
class Flow:
    id: int
    src: tuple[int, int]
    dst: tuple[int, int]
    length: int
    period: Fraction
    burst: int = 1
    jitter: Fraction = Fraction(0)
    vc: int = 0
    path: tuple[NodeId, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "src", tuple(self.src))
        object.__setattr__(self, "dst", tuple(self.dst))
        object.__setattr__(self, "period", to_fraction(self.period))
        object.__setattr__(self, "jitter", to_fraction(self.jitter))
        object.__setattr__(self, "path", tuple(NodeId(*n) for n in self.path))
        if self.length < 1:
            raise ConfigError(f"flow {self.id}: packet length must be >= 1")
        if self.period <= 0:
            raise ConfigError(f"flow {self.id}: period must be > 0")
        if self.burst < 1:
            raise ConfigError(f"flow {self.id}: burst must be >= 1")
        if self.jitter < 0:
            raise ConfigError(f"flow {self.id}: jitter must be >= 0")

    @property
    def rho(self) -> Fraction:
        return Fraction(self.length) / self.period

    @property
    def sigma(self) -> Fraction:
        return self.burst * self.length + self.jitter * self.rho

    @property
    def single_packet_sigma(self) -> Fraction:
        return self.length + self.jitter * self.rho

    @property
    def arrival(self) -> ArrivalCurve:
        return ArrivalCurve(self.sigma, self.rho)

    @cached_property
    def index(self) -> dict[NodeId, int]:
        return {n: i for i, n in enumerate(self.path)}

    def crosses(self, node: NodeId) -> bool:
        return node in self.index


@dataclass(frozen=True)
class Config:
    noc: NocModel
    flows: tuple[Flow, ...]
    priorities: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "flows", tuple(self.flows))
        prio = tuple(self.priorities) or tuple(range(self.noc.vc_count))
        object.__setattr__(self, "priorities", prio)

    @cached_property
    def by_id(self) -> dict[int, Flow]:
        return {f.id: f for f in self.flows}

    @cached_property
    def flows_at(self) -> dict[NodeId, tuple[int, ...]]:
        """Node -> ids of the flows crossing it, ascending."""
        acc: dict[NodeId, list[int]] = {}
        for f in sorted(self.flows, key=lambda f: f.id):
            for n in f.path:
                acc.setdefault(n, []).append(f.id)
        return {n: tuple(v) for n, v in acc.items()}

    def level(self, vc: int) -> int:
        """Priority level of a VC; 0 is the highest."""
        return self.priorities.index(vc)

    def flow(self, fid: int) -> Flow:
        return self.by_id[fid]

    def replace_flows(self, flows: Iterable[Flow]) -> "Config":
        return Config(self.noc, tuple(flows), self.priorities)

    def with_noc(self, noc: NocModel) -> "Config":
        return Config(noc, self.flows, self.priorities)


def _check_core(model: NocModel, core) -> None:
    if not model.in_grid(core):
        raise OutOfGrid(f"core {tuple(core)} outside {model.width}x{model.height} grid")


def xy_route(model: NocModel, src, dst) -> list[NodeId]:
    """Dimension-ordered route: all X hops, then all Y hops, then Local."""
    _check_core(model, src)
    _check_core(model, dst)
    if tuple(src) == tuple(dst):
        raise ValueError("source and destination coincide")
    x, y = src
    path = []
    while x != dst[0]:
        port = "E" if dst[0] > x else "W"
        path.append(NodeId(x, y, port))
        x += _STEP[port][0]
    while y != dst[1]:
        port = "N" if dst[1] > y else "S"
        path.append(NodeId(x, y, port))
        y += _STEP[port][1]
    path.append(NodeId(x, y, "L"))
    return path


def base_latency(flow: Flow, model: NocModel) -> Fraction:
    return sum((model.params(n).latency for n in flow.path), Fraction(0))


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    flows: tuple = ()
    node: NodeId | None = None

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


def _path_problems(model: NocModel, f: Flow) -> list[Violation]:
    out = []
    if not f.path:
        return [Violation("path", f"flow {f.id} has no path", (f.id,))]
    for n in f.path:
        if n.port not in PORTS:
            out.append(Violation("path", f"flow {f.id}: bad port {n.port!r}", (f.id,), n))
        if not model.in_grid(n):
            out.append(Violation("out-of-grid", f"flow {f.id}: node {n} outside grid", (f.id,), n))
    if out:
        return out
    if f.path[0].router != f.src:
        out.append(Violation("path", f"flow {f.id}: path does not start at source {f.src}", (f.id,)))
    last = f.path[-1]
    if last.port != "L" or last.router != f.dst:
        out.append(Violation("path", f"flow {f.id}: path must end at ({f.dst}, L)", (f.id,)))
    for a, b in zip(f.path, f.path[1:]):
        if a.port == "L" or a.next_router() != b.router:
            out.append(Violation("path", f"flow {f.id}: {a} does not lead to {b}", (f.id,), a))
    if len(set(f.path)) != len(f.path):
        out.append(Violation("path", f"flow {f.id}: path revisits a node", (f.id,)))
    return out


def _reconvergent(p: Sequence[NodeId], q_index: Mapping[NodeId, int]) -> bool:
    shared = [(i, q_index[n]) for i, n in enumerate(p) if n in q_index]
    if len(shared) <= 1:
        return False
    for (i0, j0), (i1, j1) in zip(shared, shared[1:]):
        if i1 != i0 + 1 or j1 != j0 + 1:
            return True
    return False


def validate(config: Config) -> list[Violation]:
    """Every violation of the model assumptions; an empty list means ok."""
    noc = config.noc
    errors: list[Violation] = []
    if sorted(config.priorities) != list(range(noc.vc_count)):
        errors.append(Violation("priorities", f"priorities {list(config.priorities)} are not a permutation "
                                              f"of the {noc.vc_count} VCs"))
    seen = set()
    for f in config.flows:
        if f.id in seen:
            errors.append(Violation("duplicate-id", f"flow id {f.id} used twice", (f.id,)))
        seen.add(f.id)
        if not (0 <= f.vc < noc.vc_count):
            errors.append(Violation("vc", f"flow {f.id}: vc {f.vc} outside 0..{noc.vc_count - 1}", (f.id,)))
        for core in (f.src, f.dst):
            if not noc.in_grid(core):
                errors.append(Violation("out-of-grid", f"flow {f.id}: core {core} outside grid", (f.id,)))
        if f.src == f.dst:
            errors.append(Violation("degenerate", f"flow {f.id}: source equals destination", (f.id,)))
            continue
        errors.extend(_path_problems(noc, f))
    if errors:
        return errors

    for node, ids in config.flows_at.items():
        load = sum((config.by_id[i].rho for i in ids), Fraction(0))
        rate = noc.params(node).rate
        if load > rate:
            errors.append(Violation("over-utilization",
                                    f"node {node}: load {float(load):.6g} > rate {float(rate):.6g}",
                                    ids, node))
    flows = sorted(config.flows, key=lambda f: f.id)
    for a_i, a in enumerate(flows):
        for b in flows[a_i + 1:]:
            if _reconvergent(a.path, b.index) or _reconvergent(b.path, a.index):
                errors.append(Violation("re-convergence",
                                        f"flows {a.id} and {b.id} share nodes again after diverging",
                                        (a.id, b.id)))
    return errors


# -- JSON document ----------------------------------------------------------

def _num(x):
    return to_fraction(x)


def _params(d: Mapping, fallback: NodeParams | None = None) -> NodeParams:
    fb = fallback or NodeParams()
    return NodeParams(_num(d.get("rate", fb.rate)), _num(d.get("latency", fb.latency)),
                      int(d.get("buffer", fb.buffer)))


def config_from_dict(doc: Mapping) -> Config:
    try:
        n = doc["noc"]
        default = _params(n.get("default", {}))
        overrides = {}
        for o in n.get("overrides", []):
            overrides[NodeId(int(o["x"]), int(o["y"]), port_name(o["port"]))] = _params(o, default)
        noc = NocModel(int(n["width"]), int(n["height"]), default, overrides,
                       _num(n.get("flit_size", 1)), int(n.get("vc_count", 1)))
        flows = []
        for fd in doc.get("flows", []):
            src, dst = tuple(fd["src"]), tuple(fd["dst"])
            if "path" in fd:
                path = [NodeId(int(p[0]), int(p[1]), port_name(p[2])) for p in fd["path"]]
            elif src == dst:
                path = []
            else:
                path = xy_route(noc, src, dst)
            flows.append(Flow(int(fd["id"]), src, dst, int(fd["len"]), _num(fd["period"]),
                              int(fd.get("burst", 1)), _num(fd.get("jitter", 0)),
                              int(fd.get("vc", 0)), tuple(path)))
        prio = tuple(int(v) for v in doc.get("priorities", ()))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed config document: {exc!r}") from exc
    return Config(noc, tuple(flows), prio)


def load_config(path) -> Config:
    with open(path, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def _jnum(x: Fraction):
    x = to_fraction(x)
    return int(x) if x.denominator == 1 else str(x) if len(str(float(x))) > 12 else float(x)


def config_to_dict(config: Config, explicit_paths: bool = False) -> dict:
    noc = config.noc
    d = noc.default
    doc = {
        "noc": {
            "width": noc.width,
            "height": noc.height,
            "default": {"rate": _jnum(d.rate), "latency": _jnum(d.latency), "buffer": d.buffer},
            "overrides": [
                {"x": n.x, "y": n.y, "port": n.port, "rate": _jnum(p.rate),
                 "latency": _jnum(p.latency), "buffer": p.buffer}
                for n, p in sorted(noc.overrides.items())
            ],
            "flit_size": _jnum(noc.flit_size),
            "vc_count": noc.vc_count,
        },
        "flows": [],
        "priorities": list(config.priorities),
    }
    for f in config.flows:
        fd = {"id": f.id, "src": list(f.src), "dst": list(f.dst), "len": f.length,
              "period": _jnum(f.period), "burst": f.burst, "jitter": _jnum(f.jitter), "vc": f.vc}
        routed = f.src != f.dst and noc.in_grid(f.src) and noc.in_grid(f.dst) \
            and list(f.path) == xy_route(noc, f.src, f.dst)
        if explicit_paths or not routed:
            fd["path"] = [[n.x, n.y, n.port] for n in f.path]
        doc["flows"].append(fd)
    return doc


def save_config(config: Config, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2) + "\n", encoding="utf-8")
