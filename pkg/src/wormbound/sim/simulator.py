"""Flit-level wormhole simulator used as a safety and tightness oracle.

Router model
  * input buffers per (incoming link, VC), FIFO, shared by all outputs of the
    router (head-of-line blocking is real);
  * an output VC is held by one packet from its head flit to its tail flit;
  * VCs are served by preemptive fixed priority at flit granularity, a
    stalled higher-priority VC lets lower ones through (bypass);
  * packets of one VC compete round-robin for the output VC;
  * one flit per cycle per output at most, rate R < 1 via a token counter;
  * a flit forwarded at t reaches the next buffer at t + T and holds its
    slot from t on (credit-based backpressure).
"""
from __future__ import annotations

import csv
import graphlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from ..platform import PORTS, Config, NodeId
from . import kernel

__all__ = [
    "TrafficSchedule",
    "SimResult",
    "CompiledNoc",
    "DeadlockDetected",
    "SafetyViolation",
    "TightnessResult",
    "compile_config",
    "simulate",
    "tightness_sweep",
    "load_schedule",
    "write_trace_csv",
]


class DeadlockDetected(RuntimeError):
    def __init__(self, message, cycle=None, pending=None):
        super().__init__(message)
        self.cycle = cycle
        self.pending = pending


class SafetyViolation(AssertionError):
    """An observed delay exceeded the analytic bound."""

    def __init__(self, flow, seed, observed, bound, summary=""):
        super().__init__(f"flow {flow}: observed delay {observed} > bound {float(bound):.6f} "
                         f"(run seed {seed}) {summary}".rstrip())
        self.flow = flow
        self.seed = seed
        self.observed = observed
        self.bound = bound
        self.summary = summary


@dataclass
class TrafficSchedule:
    """How packets are released.

    Each flow releases ``burst`` packets at its offset, then again every
    ``burst * period`` cycles, which keeps it inside its (b*L, L/P) envelope.
    Offsets not given explicitly are drawn uniformly in [0, P) from ``seed``.
    """

    seed: int = 0
    runs: int = 1
    horizon: int | None = None
    offsets: Mapping[int, int] | None = None
    jitter: bool = True


@dataclass
class SimResult:
    delays: dict[int, np.ndarray]
    releases: dict[int, np.ndarray]
    offsets: dict[int, int]
    cycles: int
    undelivered: int = 0
    trace: np.ndarray | None = None
    flits_injected: dict[int, int] = field(default_factory=dict)
    flits_delivered: dict[int, int] = field(default_factory=dict)

    @property
    def max_delay(self) -> dict[int, int]:
        return {f: int(d.max()) if d.size else 0 for f, d in self.delays.items()}

    @property
    def d_wc(self) -> int:
        return max(self.max_delay.values(), default=0)


@dataclass
class CompiledNoc:
    config: Config
    nodes: list[NodeId]
    flow_ids: list[int]
    arrays: dict[str, np.ndarray]
    window: int

    def node_index(self, n: NodeId) -> int:
        return self.nodes.index(n)


def _buffer_capacity(config: Config, router, feeding: NodeId) -> int:
    """Slots of the input buffer at ``router`` fed by ``feeding``.

    The buffer serves every output of the router, so it gets the largest of
    their depths; the link latency adds pipeline slots so a full-rate stream
    is not throttled by credit round trips.
    """
    x, y = router
    depth = max(config.noc.params(NodeId(x, y, p)).buffer for p in PORTS)
    return depth + int(config.noc.params(feeding).latency) - 1


def compile_config(config: Config) -> CompiledNoc:
    noc = config.noc
    flows = sorted(config.flows, key=lambda f: f.id)
    nodes = sorted({n for f in flows for n in f.path})
    idx = {n: i for i, n in enumerate(nodes)}
    nvc = noc.vc_count

    rate = np.zeros(len(nodes), np.float64)
    lat = np.zeros(len(nodes), np.int64)
    for n, i in idx.items():
        p = noc.params(n)
        if p.rate > 1:
            raise ValueError(f"simulator needs R <= 1 flit/cycle, node {n} has {p.rate}")
        if p.latency.denominator != 1 or p.latency < 1:
            raise ValueError(f"simulator needs integer T >= 1, node {n} has {p.latency}")
        rate[i] = float(p.rate)
        lat[i] = int(p.latency)

    # buffers exist only for (link, vc) pairs some flow actually uses
    buf_of = np.full((len(nodes), nvc), -1, np.int64)
    caps = []
    succ: dict[NodeId, set] = {n: set() for n in nodes}
    feeders: dict[NodeId, list[int]] = {n: [] for n in nodes}
    for f in flows:
        for a, b in zip(f.path, f.path[1:]):
            succ[a].add(b)
            if buf_of[idx[a], f.vc] < 0:
                buf_of[idx[a], f.vc] = len(caps)
                caps.append(_buffer_capacity(config, b.router, a))
            s = int(buf_of[idx[a], f.vc])
            if s not in feeders[b]:
                feeders[b].append(s)
    nbuf = len(caps)
    for i, f in enumerate(flows):
        feeders[f.path[0]].append(nbuf + i)

    src_ptr = np.zeros(len(nodes) + 1, np.int64)
    src_idx = []
    for n, i in idx.items():
        lst = sorted(feeders[n])
        src_idx.extend(lst)
        src_ptr[i + 1] = src_ptr[i] + len(lst)

    try:
        # downstream nodes first, so a slot freed this cycle is reusable upstream
        order = [idx[n] for n in graphlib.TopologicalSorter(succ).static_order()]
    except graphlib.CycleError:
        order = list(range(len(nodes)))

    path_ptr = np.zeros(len(flows) + 1, np.int64)
    path_nodes = []
    for i, f in enumerate(flows):
        path_nodes.extend(idx[n] for n in f.path)
        path_ptr[i + 1] = len(path_nodes)

    arrays = dict(
        node_rate=rate,
        node_lat=lat,
        node_order=np.asarray(order, np.int64),
        src_ptr=src_ptr,
        src_idx=np.asarray(src_idx, np.int64),
        vc_order=np.asarray(config.priorities, np.int64),
        buf_of=buf_of,
        buf_cap=np.asarray(caps, np.int64),
        f_len=np.asarray([f.length for f in flows], np.int64),
        f_vc=np.asarray([f.vc for f in flows], np.int64),
        path_ptr=path_ptr,
        path_nodes=np.asarray(path_nodes, np.int64),
    )
    worst_path = max((int(lat[[idx[n] for n in f.path]].sum()) for f in flows), default=1)
    min_rate = float(rate.min()) if len(rate) else 1.0
    window = 10 * worst_path + int(math.ceil(1.0 / min_rate)) + 1
    return CompiledNoc(config, nodes, [f.id for f in flows], arrays, window)


def default_horizon(config: Config, offsets: Mapping[int, int]) -> int:
    span = max((f.burst * f.period for f in config.flows), default=Fraction(1))
    return max(offsets.values(), default=0) + int(math.ceil(5 * span))


def draw_offsets(config: Config, rng: np.random.Generator) -> dict[int, int]:
    return {f.id: int(rng.integers(0, max(1, math.ceil(f.period))))
            for f in sorted(config.flows, key=lambda f: f.id)}


def _releases(config: Config, offsets, horizon, rng, jitter: bool):
    out = {}
    for f in sorted(config.flows, key=lambda f: f.id):
        step = f.burst * f.period
        jmax = int(math.floor(f.jitter)) if jitter else 0
        times = []
        m = 0
        while True:
            nominal = offsets[f.id] + m * step
            if nominal >= horizon and m > 0:
                break
            base = int(math.ceil(nominal))
            for _ in range(f.burst):
                times.append(base + (int(rng.integers(0, jmax + 1)) if jmax else 0))
            m += 1
        out[f.id] = np.sort(np.asarray(times, np.int64))
    return out


def simulate(config: Config, schedule: TrafficSchedule | None = None, *, offsets=None,
             trace: bool = False, compiled: CompiledNoc | None = None,
             run: int = 0) -> SimResult:
    """Run one simulation; offsets come from the argument, the schedule, or a
    seeded draw (in that order)."""
    schedule = schedule or TrafficSchedule()
    cn = compiled or compile_config(config)
    rng = np.random.default_rng([schedule.seed, run])
    if offsets is None:
        offsets = dict(schedule.offsets) if schedule.offsets else draw_offsets(config, rng)
    offsets = {int(k): int(v) for k, v in offsets.items()}
    if not cn.flow_ids:
        return SimResult({}, {}, offsets, 0)
    horizon = schedule.horizon or default_horizon(config, offsets)
    rel = _releases(config, offsets, horizon, rng, schedule.jitter)

    flow_pkt_ptr = np.zeros(len(cn.flow_ids) + 1, np.int64)
    for i, fid in enumerate(cn.flow_ids):
        flow_pkt_ptr[i + 1] = flow_pkt_ptr[i] + len(rel[fid])
    pkt_release = np.concatenate([rel[fid] for fid in cn.flow_ids])
    pkt_flow = np.repeat(np.arange(len(cn.flow_ids), dtype=np.int64), np.diff(flow_pkt_ptr))
    pkt_done = np.full(len(pkt_release), -1, np.int64)

    a = cn.arrays
    total_flits = int(sum(len(rel[fid]) * config.by_id[fid].length for fid in cn.flow_ids))
    hops = int(a["path_nodes"].shape[0])
    t_max = int(pkt_release.max()) + (total_flits + 1) * (cn.window + hops) + 1000
    n_tr = total_flits * max(1, hops) if trace else 1
    tr = [np.zeros(n_tr, np.int64) for _ in range(5)]

    status, cycles, used = kernel.cycle_loop(
        a["node_rate"], a["node_lat"], a["node_order"], a["src_ptr"], a["src_idx"],
        a["vc_order"], a["buf_of"], a["buf_cap"], a["f_len"], a["f_vc"], a["path_ptr"],
        a["path_nodes"], flow_pkt_ptr, pkt_flow, pkt_release, pkt_done,
        t_max, cn.window, trace, *tr,
    )
    pending = int((pkt_done < 0).sum())
    if status == kernel.STATUS_DEADLOCK:
        raise DeadlockDetected(f"no flit moved for {cn.window} cycles at cycle {cycles} "
                               f"with {pending} packets undelivered", cycles, pending)
    if status != kernel.STATUS_DONE:
        raise RuntimeError(f"simulation hit the {t_max}-cycle limit with {pending} packets pending")

    delays, releases, inj, dlv = {}, {}, {}, {}
    for i, fid in enumerate(cn.flow_ids):
        lo, hi = flow_pkt_ptr[i], flow_pkt_ptr[i + 1]
        releases[fid] = pkt_release[lo:hi]
        delays[fid] = pkt_done[lo:hi] - pkt_release[lo:hi]
        n = int(hi - lo) * config.by_id[fid].length
        inj[fid] = n
        dlv[fid] = int((pkt_done[lo:hi] >= 0).sum()) * config.by_id[fid].length
    trace_arr = None
    if trace:
        trace_arr = np.zeros(used, dtype=[("cycle", "i8"), ("node", "i8"), ("vc", "i8"),
                                          ("flow", "i8"), ("event", "i8")])
        for name, col in zip(("cycle", "node", "vc", "flow", "event"), tr):
            trace_arr[name] = col[:used]
        trace_arr["flow"] = np.asarray(cn.flow_ids, np.int64)[trace_arr["flow"]]
    return SimResult(delays, releases, offsets, int(cycles), pending, trace_arr, inj, dlv)


_EVENTS = {kernel.EV_HEAD: "head", kernel.EV_BODY: "body", kernel.EV_TAIL: "tail"}


def write_trace_csv(result: SimResult, compiled: CompiledNoc, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["cycle", "node", "vc", "flow", "event"])
        if result.trace is None:
            return
        for row in result.trace:
            w.writerow([int(row["cycle"]), str(compiled.nodes[row["node"]]), int(row["vc"]),
                        int(row["flow"]), _EVENTS[int(row["event"])]])


@dataclass
class TightnessResult:
    runs: int
    seed: int
    max_delay: dict[int, int]
    bound: dict[int, Fraction]
    violations: list[SafetyViolation] = field(default_factory=list)

    @property
    def ratio(self) -> dict[int, float]:
        return {f: self.max_delay[f] / float(self.bound[f]) for f in self.max_delay}

    @property
    def average_ratio(self) -> float:
        r = list(self.ratio.values())
        return sum(r) / len(r) if r else 0.0

    @property
    def max_ratio(self) -> float:
        return max(self.ratio.values(), default=0.0)


def _bounds_of(bounds) -> dict[int, Fraction]:
    if hasattr(bounds, "bounds"):
        return {fid: b.D_f for fid, b in bounds.bounds.items()}
    return {int(k): Fraction(v) for k, v in bounds.items()}


def tightness_sweep(config: Config, bounds, runs: int = 100, seed: int = 0, jobs: int = 1,
                    horizon: int | None = None, raise_on_violation: bool = True) -> TightnessResult:
    """Max observed delay over ``runs`` random-offset simulations, against ``bounds``
    (an analysis report or a flow id -> bound mapping)."""
    bd = _bounds_of(bounds)
    cn = compile_config(config)
    sched = TrafficSchedule(seed=seed, runs=runs, horizon=horizon)

    def one(run):
        return run, simulate(config, sched, compiled=cn, run=run)

    worst = {fid: 0 for fid in cn.flow_ids}
    res = TightnessResult(runs, seed, worst, {f: bd.get(f, Fraction(0)) for f in cn.flow_ids})
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            outs = list(ex.map(one, range(runs)))
    else:
        outs = map(one, range(runs))
    for run, r in outs:
        for fid, d in r.max_delay.items():
            worst[fid] = max(worst[fid], d)
            if fid in bd and d > bd[fid]:
                v = SafetyViolation(fid, (seed, run), d, bd[fid],
                                    f"offsets={r.offsets}")
                res.violations.append(v)
                if raise_on_violation:
                    raise v
    return res


def load_schedule(path) -> TrafficSchedule:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    offs = doc.get("offsets")
    if isinstance(offs, list):
        offs = {int(o["flow"]): int(o["offset"]) for o in offs}
    elif isinstance(offs, dict):
        offs = {int(k): int(v) for k, v in offs.items()}
    return TrafficSchedule(int(doc.get("seed", 0)), int(doc.get("runs", 1)),
                           doc.get("horizon"), offs, bool(doc.get("jitter", True)))
