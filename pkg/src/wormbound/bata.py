"""Fixed-point IB-set search and the indirect-blocking latency with
recursive burst propagation (the original buffer-aware analysis).

Results are only safe when no flow has two packets queued back to back in
the network; see :mod:`wormbound.gbata` for the variant that is.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator

from .interference import Subpath, db_set, nodes_of, priority_view, subpath_relative
from .netcalc import ServiceCurve, UnstableSystem
from .platform import Config, Flow, NodeId

__all__ = ["IBSet", "bata_ib_set", "vc_service_curve", "bata_indirect_latency", "BurstAt"]

# (flow id, node) -> burst of that flow when it reaches node
BurstAt = Callable[[int, NodeId], Fraction]


@dataclass(frozen=True)
class IBSet:
    entries: tuple[Subpath, ...] = ()

    def __iter__(self) -> Iterator[Subpath]:
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __bool__(self):
        return bool(self.entries)

    def pairs(self) -> set[tuple[int, tuple[NodeId, ...]]]:
        return {(s.flow, s.nodes) for s in self.entries}

    def flows(self) -> set[int]:
        return {s.flow for s in self.entries}


def bata_ib_set(f: Flow, restrict, config: Config, to_ignore: Iterable[int] = (),
                counter=None) -> IBSet:
    """Worklist closure over subpaths, starting from same-VC direct blockers.

    ``counter`` (any object with an int ``iterations`` attribute) is bumped
    once per worklist pop.
    """
    noc = config.noc
    by_id = config.by_id
    view = priority_view(f, config)
    ignore = set(to_ignore)
    direct_sp = set(db_set(f, f.path, config)) & view.sp
    # these never show up in the result: their blocking is already direct
    excluded = direct_sp | {f.id}

    work: deque[Subpath] = deque()
    for i in db_set(f, restrict, config):
        if i in view.sp and i not in ignore:
            sub = subpath_relative(by_id[i], restrict, noc)
            if sub is not None:
                work.append(sub)

    result: list[Subpath] = []
    seen: set[tuple[int, int]] = set()
    while work:
        if counter is not None:
            counter.iterations += 1
        sj = work.popleft()
        j = by_id[sj.flow]
        sp_j = priority_view(j, config).sp
        for k in db_set(j, sj, config):
            if k not in sp_j or k in excluded:
                continue
            sk = subpath_relative(by_id[k], sj, noc)
            if sk is None or (k, sk.start) in seen:
                continue
            seen.add((k, sk.start))
            result.append(sk)
            work.append(sk)
    return IBSet(tuple(result))


def _lp_blocks(node: NodeId, lp: frozenset, config: Config) -> bool:
    return any(i in lp for i in config.flows_at.get(node, ()))


def vc_service_curve(k: Flow, sub: Subpath, config: Config, burst_at: BurstAt) -> ServiceCurve:
    """Service left to k's VC on ``sub`` by higher-priority VCs (flit preemption)."""
    noc = config.noc
    view = priority_view(k, config)
    nodes = nodes_of(sub)

    rate = None
    worst = None
    for r in nodes:
        load = sum((config.by_id[i].rho for i in config.flows_at.get(r, ()) if i in view.hp), Fraction(0))
        res = noc.params(r).rate - load
        if rate is None or res < rate:
            rate, worst = res, r
    if rate <= 0:
        raise UnstableSystem(f"flow {k.id}: no residual VC service at {worst}", node=worst, residual=rate)

    per_node = {}
    latency = Fraction(0)
    for r in nodes:
        p = noc.params(r)
        t = p.latency
        if _lp_blocks(r, view.lp, config):
            t += noc.flit_size / p.rate
        per_node[r] = t
        latency += t

    for i in db_set(k, nodes, config):
        if i not in view.hp:
            continue
        fi = config.by_id[i]
        shared = [r for r in nodes if fi.crosses(r)]
        burst = burst_at(i, shared[0])
        latency += (burst + fi.rho * sum(per_node[r] for r in shared)) / rate
    return ServiceCurve(rate, latency)


def bata_indirect_latency(f: Flow, ib: IBSet, config: Config, burst_at: BurstAt) -> Fraction:
    total = Fraction(0)
    for sub in ib:
        beta = vc_service_curve(config.by_id[sub.flow], sub, config, burst_at)
        total += burst_at(sub.flow, sub.nodes[0]) / beta.rate + beta.latency
    return total
