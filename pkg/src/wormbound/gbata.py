"""Indirect-blocking dependency graph and the CPQ-safe indirect latency.

Each vertex is a (flow, subpath) pair: a stalled packet of that flow sitting
on that subpath.  A vertex depends on the vertex whose subpath its own path
leaves from.  Same-flow chains are allowed, which is what lets consecutive
packets of one flow pile up behind each other.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .bata import BurstAt, IBSet, vc_service_curve
from .interference import Subpath, db_set, priority_view, subpath_relative
from .platform import Config, Flow

__all__ = [
    "Vertex",
    "IBGraph",
    "construct_ib_graph",
    "get_next_vertices",
    "add_vertex",
    "extract_ib_set",
    "gbata_indirect_latency",
    "direct_vertex_excess",
    "to_dot",
]

VKey = tuple[int, int, int]  # flow id, start index, length


@dataclass(eq=False)
class Vertex:
    fkey: int
    path: Subpath
    dependencies: list["Vertex"] = field(default_factory=list)
    dependents: list["Vertex"] = field(default_factory=list)

    @property
    def key(self) -> VKey:
        return self.path.key

    def label(self) -> str:
        return self.path.label()

    def __repr__(self):
        return f"Vertex({self.label()})"


def _link(dependent: Vertex, dependency: Vertex) -> None:
    if all(d is not dependency for d in dependent.dependencies):
        dependent.dependencies.append(dependency)
    if all(d is not dependent for d in dependency.dependents):
        dependency.dependents.append(dependent)


@dataclass
class IBGraph:
    root: Vertex
    vertices: dict[VKey, Vertex] = field(default_factory=dict)
    levels: int = 0  # number of frontier expansions performed

    def __len__(self):
        return len(self.vertices)

    def __contains__(self, key) -> bool:
        return key in self.vertices

    def edges(self) -> list[tuple[VKey, VKey]]:
        """(dependent, dependency) pairs in deterministic order."""
        return [(v.key, d.key) for v in self.vertices.values() for d in v.dependencies]


def add_vertex(graph: IBGraph, v: Vertex) -> tuple[Vertex, bool]:
    """Insert ``v`` or merge it into the vertex already holding its subpath.

    Returns the vertex that lives in the graph and whether it is new.
    """
    have = graph.vertices.get(v.key)
    if have is None:
        graph.vertices[v.key] = v
        for d in v.dependencies:
            _link(v, d)
        return v, True
    for d in v.dependencies:
        _link(have, d)
    for d in v.dependents:
        _link(d, have)
    return have, False


def get_next_vertices(frontier: list[Vertex], config: Config, terminal: bool = True) -> list[Vertex]:
    """Candidate vertices one step downstream of every vertex in ``frontier``.

    A candidate is any flow on the same VC as the vertex's flow (the vertex's
    own flow included) that leaves the vertex's subpath with nodes to spare.
    With ``terminal`` set, another flow whose path *ends* on the subpath also
    yields a one-node vertex at its last node: it never stalls there, but it
    holds that output while its packet drains.
    The returned vertices are not yet in any graph; each carries a single
    dependency on the vertex it came from.
    """
    out = []
    by_id = config.by_id
    for v in frontier:
        vc = by_id[v.fkey].vc
        cands = set(db_set(by_id[v.fkey], v.path, config))
        cands.add(v.fkey)
        for k in sorted(cands):
            fk = by_id[k]
            if fk.vc != vc:
                continue
            sub = subpath_relative(fk, v.path, config.noc)
            if sub is None and terminal and k != v.fkey and fk.path[-1] in v.path.nodes:
                sub = Subpath(k, len(fk.path) - 1, fk.path[-1:])
            if sub is not None:
                out.append(Vertex(k, sub, dependencies=[v]))
    return out


def construct_ib_graph(f: Flow, config: Config, end: int | None = None,
                       terminal: bool = True) -> IBGraph:
    """Breadth-first closure from the root (f, f.path[:end])."""
    root = Vertex(f.id, Subpath.of(f, 0, end))
    graph = IBGraph(root, {root.key: root})
    frontier = [root]
    while frontier:
        graph.levels += 1
        fresh = []
        for cand in get_next_vertices(frontier, config, terminal):
            v, new = add_vertex(graph, cand)
            if new:
                fresh.append(v)
        frontier = fresh
    return graph


def extract_ib_set(graph: IBGraph, f: Flow, config: Config) -> IBSet:
    blockers = set(db_set(f, graph.root.path, config)) | {f.id}
    return IBSet(tuple(v.path for v in graph.vertices.values()
                       if v is not graph.root and v.fkey not in blockers))


def gbata_indirect_latency(f: Flow, ib: IBSet, config: Config, burst_at: BurstAt) -> Fraction:
    """Each IB subpath holds at most one packet, so its burst is one packet
    plus jitter; no upstream propagation is needed for it."""
    total = Fraction(0)
    for sub in ib:
        k = config.by_id[sub.flow]
        beta = vc_service_curve(k, sub, config, burst_at)
        total += k.single_packet_sigma / beta.rate + beta.latency
    return total


def direct_vertex_excess(graph: IBGraph, f: Flow, config: Config, burst_at: BurstAt) -> Fraction:
    """Extra time same-VC direct blockers of f may hold a shared output
    because of other VCs (higher-priority preemption, lower-priority flits).

    The direct-blocking term charges their packets at the shared nodes as if
    they streamed through unimpeded.  This adds, for each graph vertex of such
    a flow and for its path upstream of the junction with f, the gap between
    its VC service curve and the bare path.
    """
    direct = set(db_set(f, graph.root.path, config)) & priority_view(f, config).sp
    total = Fraction(0)
    for v in graph.vertices.values():
        if v is graph.root or v.fkey not in direct:
            continue
        total += _excess(config.by_id[v.fkey], v.path, config, burst_at)
    # a blocker holds the shared output from head to tail, so other-VC
    # preemption of its tail upstream of the junction stretches that hold too
    shared = set(graph.root.path.nodes)
    for kid in sorted(direct):
        k = config.by_id[kid]
        j = next(i for i, r in enumerate(k.path) if r in shared)
        if j:
            total += _excess(k, Subpath(k.id, 0, k.path[:j]), config, burst_at)
    return total


def _excess(k: Flow, sub: Subpath, config: Config, burst_at: BurstAt) -> Fraction:
    beta = vc_service_curve(k, sub, config, burst_at)
    nodes = sub.nodes
    r_min = min(config.noc.params(r).rate for r in nodes)
    bare = sum((config.noc.params(r).latency for r in nodes), Fraction(0))
    sigma = k.single_packet_sigma
    return (sigma / beta.rate + beta.latency) - (sigma / r_min + bare)


def to_dot(graph: IBGraph, name: str = "ib_graph") -> str:
    lines = [f"digraph {name} {{", "  rankdir=RL;"]
    for v in graph.vertices.values():
        shape = "doublecircle" if v is graph.root else "ellipse"
        lines.append(f'  "{v.label()}" [shape={shape}];')
    for v in graph.vertices.values():
        for d in v.dependencies:
            lines.append(f'  "{v.label()}" -> "{d.label()}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
