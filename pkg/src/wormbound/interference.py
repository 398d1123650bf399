"""Structural interference: spread indexes, relative subpaths, DB sets, priority classes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .platform import Config, Flow, NocModel, NodeId

__all__ = [
    "Subpath",
    "PriorityView",
    "spread_index",
    "divergence",
    "convergence",
    "last_shared_index",
    "subpath_relative",
    "db_set",
    "priority_view",
    "nodes_of",
]


@dataclass(frozen=True)
class Subpath:
    flow: int
    start: int
    nodes: tuple[NodeId, ...]

    def __post_init__(self):
        if not self.nodes:
            raise ValueError("empty subpath")

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.flow, self.start, len(self.nodes))

    @property
    def end(self) -> int:
        return self.start + len(self.nodes)

    def __len__(self):
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)

    def __getitem__(self, i):
        return self.nodes[i]

    def label(self) -> str:
        return f"{self.flow}:{self.start}+{len(self.nodes)}"

    @classmethod
    def of(cls, flow: Flow, start: int = 0, end: int | None = None) -> "Subpath":
        end = len(flow.path) if end is None else end
        return cls(flow.id, start, flow.path[start:end])


def nodes_of(ref) -> Sequence[NodeId]:
    if isinstance(ref, Subpath):
        return ref.nodes
    if isinstance(ref, Flow):
        return ref.path
    return ref


def spread_index(flow: Flow, i: int, model: NocModel) -> int:
    """Number of consecutive buffers from path[i] needed to hold one packet."""
    if not 0 <= i < len(flow.path):
        raise IndexError(f"path index {i} out of range for flow {flow.id}")
    held = 0
    for l, node in enumerate(flow.path[i:], start=1):
        held += model.params(node).buffer
        if held >= flow.length:
            return l
    return len(flow.path) - i


def last_shared_index(pk: Sequence[NodeId], ref) -> int | None:
    ref_set = set(nodes_of(ref))
    last = None
    for i, n in enumerate(pk):
        if n in ref_set:
            last = i
    return last


def divergence(pk: Sequence[NodeId], pl) -> NodeId | None:
    """Last node of ``pk`` that ``pl`` also crosses."""
    i = last_shared_index(nodes_of(pk), pl)
    return None if i is None else nodes_of(pk)[i]


def convergence(pi, pf) -> NodeId | None:
    """First node along ``pf`` shared with ``pi``."""
    s = set(nodes_of(pi))
    for n in nodes_of(pf):
        if n in s:
            return n
    return None


def subpath_relative(k: Flow, ref, model: NocModel) -> Subpath | None:
    """Part of k's path just past its divergence from ``ref`` that a stalled
    packet of k can occupy; truncated at k's destination."""
    last = last_shared_index(k.path, ref)
    if last is None or last + 1 >= len(k.path):
        return None
    start = last + 1
    n = spread_index(k, start, model)
    return Subpath(k.id, start, k.path[start:start + n])


def db_set(f: Flow, restrict, config: Config) -> tuple[int, ...]:
    """Ids of flows other than f crossing at least one node of ``restrict``."""
    found = set()
    at = config.flows_at
    for n in nodes_of(restrict):
        found.update(at.get(n, ()))
    found.discard(f.id)
    return tuple(sorted(found))


@dataclass(frozen=True)
class PriorityView:
    hp: frozenset
    sp: frozenset
    lp: frozenset

    @property
    def slp(self) -> frozenset:
        return self.sp | self.lp

    @property
    def shp(self) -> frozenset:
        return self.sp | self.hp


def priority_view(f: Flow, config: Config, among: Iterable[Flow] | None = None) -> PriorityView:
    if among is None:
        # Config is immutable, so the partition can live next to it
        memo = config.__dict__.setdefault("_priority_views", {})
        if f.id not in memo:
            memo[f.id] = priority_view(f, config, config.flows)
        return memo[f.id]
    mine = config.level(f.vc)
    hp, sp, lp = set(), set(), set()
    for g in among:
        if g.id == f.id:
            continue
        lvl = config.level(g.vc)
        (hp if lvl < mine else sp if lvl == mine else lp).add(g.id)
    return PriorityView(frozenset(hp), frozenset(sp), frozenset(lp))
