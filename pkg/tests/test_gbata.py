from dataclasses import replace

import frozen
import oracles
from conftest import flow, mesh
from hypothesis import given, settings
from hypothesis import strategies as st
from wormbound.analyzer import Engine, analyze_all
from wormbound.bata import IBSet
from wormbound.gbata import (
    IBGraph,
    Vertex,
    add_vertex,
    construct_ib_graph,
    direct_vertex_excess,
    extract_ib_set,
    gbata_indirect_latency,
    get_next_vertices,
    to_dot,
)
from wormbound.generate import GeneratorSpec, generate
from wormbound.interference import Subpath
from wormbound.platform import Config

CHAIN = ["1:0+4", "2:1+3", "2:4+2", "3:1+3", "3:4+3"]


def test_cpq_chain(cpq):
    g = construct_ib_graph(cpq.by_id[1], cpq)
    assert [v.label() for v in g.vertices.values()] == CHAIN
    keys = list(g.vertices)
    assert g.edges() == [(keys[i + 1], keys[i]) for i in range(4)]
    assert not g.root.dependencies
    assert [s.key for s in extract_ib_set(g, cpq.by_id[1], cpq)] == frozen.CPQ_IB_KEYS


def test_single_flow_graph():
    noc = mesh()
    f = flow(noc, 1, (0, 0), (3, 2))
    cfg = Config(noc, [f])
    g = construct_ib_graph(f, cfg)
    assert len(g) == 1 and g.root.fkey == 1
    assert not extract_ib_set(g, f, cfg)


def test_next_vertices_steps(cpq):
    g = construct_ib_graph(cpq.by_id[1], cpq)
    v = list(g.vertices.values())
    assert [w.label() for w in get_next_vertices([g.root], cpq)] == ["2:1+3"]
    assert "2:4+2" in [w.label() for w in get_next_vertices([v[1]], cpq)]
    assert get_next_vertices([v[4]], cpq) == []  # 3:S_d touches nobody and ends flow 3


def test_only_direct_blockers_give_empty_ib():
    noc = mesh()
    a = flow(noc, 1, (0, 1), (3, 1))
    b = flow(noc, 2, (1, 1), (3, 2))  # shares (1,1,E),(2,1,E) then turns north
    cfg = Config(noc, [a, b])
    g = construct_ib_graph(a, cfg)
    assert {v.fkey for v in g.vertices.values()} == {1, 2}
    assert not extract_ib_set(g, a, cfg)


def test_merge_unions_edges(cpq):
    g = construct_ib_graph(cpq.by_id[1], cpq)
    v = list(g.vertices.values())
    dup = Vertex(2, v[2].path, dependencies=[v[0]])
    have, new = add_vertex(g, dup)
    assert have is v[2] and not new and len(g) == 5
    assert v[0] in v[2].dependencies and v[2] in v[0].dependents


def test_indirect_latency(cpq, chained):
    f1 = cpq.by_id[1]
    burst = Engine(cpq).burst_at
    assert gbata_indirect_latency(f1, IBSet(()), cpq, burst) == 0
    one = IBSet((Subpath.of(chained.by_id[3], 1),))
    assert gbata_indirect_latency(chained.by_id[1], one, chained, burst) == frozen.GBATA_SINGLE_PAIR
    ib = extract_ib_set(construct_ib_graph(f1, cpq), f1, cpq)
    assert gbata_indirect_latency(f1, ib, cpq, burst) == frozen.GBATA_CPQ_T_IB


def test_indirect_latency_needs_no_upstream_curves(cpq):
    eng = Engine(cpq)
    f1 = cpq.by_id[1]
    ib = extract_ib_set(construct_ib_graph(f1, cpq), f1, cpq)
    before = eng.stats.n_e2e
    gbata_indirect_latency(f1, ib, cpq, eng.burst_at)
    assert eng.stats.n_e2e == before


def test_exclusive_vcs_have_no_ib(exclusive_vc):
    for f in exclusive_vc.flows:
        assert not extract_ib_set(construct_ib_graph(f, exclusive_vc), f, exclusive_vc)


def test_dot(cpq):
    dot = to_dot(construct_ib_graph(cpq.by_id[1], cpq), "flow_1")
    assert dot.startswith("digraph flow_1 {")
    assert '"1:0+4" [shape=doublecircle]' in dot
    assert '"2:1+3" -> "1:0+4";' in dot and dot.count("->") == 4


def test_terminal_flow_becomes_vertex():
    # flow 3 ends on flow 2's subpath: its packet holds that output while draining
    noc = mesh(5, 2)
    f1 = flow(noc, 1, (0, 0), (2, 0))
    f2 = flow(noc, 2, (1, 0), (4, 0))
    f3 = flow(noc, 3, (2, 1), (4, 0), path=[(2, 1, "E"), (3, 1, "S"), (3, 0, "E"), (4, 0, "L")])
    cfg = Config(noc, [f1, f2, f3])
    ext = [s.label() for s in extract_ib_set(construct_ib_graph(f1, cfg), f1, cfg)]
    plain = [s.label() for s in extract_ib_set(construct_ib_graph(f1, cfg, terminal=False), f1, cfg)]
    assert plain == [] and ext == ["3:3+1"]


def test_other_vc_excess():
    # f and its same-VC blocker k share one node; a higher-priority h preempts k downstream
    noc = mesh(5, 1, vcs=2)
    f = flow(noc, 1, (0, 0), (2, 0), vc=1)
    k = flow(noc, 2, (1, 0), (4, 0), vc=1)
    h = flow(noc, 3, (2, 0), (4, 0), length=2, period=40, vc=0)
    cfg = Config(noc, [f, k, h])
    eng = Engine(cfg)
    g = construct_ib_graph(f, cfg)
    rate = 1 - h.rho
    lat = 3 + (h.sigma + h.rho * 3) / rate
    expect = (3 / rate + lat) - (3 + 3)
    assert direct_vertex_excess(g, f, cfg, eng.burst_at) == expect
    ext, plain = analyze_all(cfg), analyze_all(cfg, extended=False)
    assert ext.bounds[1].D_f - plain.bounds[1].D_f == expect
    # same flows on one VC: nothing left to preempt the blocker
    single = Config(mesh(5, 1), [replace(x, vc=0) for x in (f, k, h)])
    s_f = single.by_id[1]
    assert direct_vertex_excess(construct_ib_graph(s_f, single), s_f, single, Engine(single).burst_at) == 0


configs = st.builds(
    lambda seed, n, vcs: generate(GeneratorSpec("uniform", n, 4, 4, length=(1, 8), vc_count=vcs, seed=seed)),
    st.integers(0, 10_000), st.integers(1, 12), st.integers(1, 2))


@settings(max_examples=100, deadline=None)
@given(configs)
def test_ib_matches_independent_closure(cfg):
    paths = {f.id: f.path for f in cfg.flows}
    lengths = {f.id: f.length for f in cfg.flows}
    vcs = {f.id: f.vc for f in cfg.flows}
    for f in cfg.flows:
        g = construct_ib_graph(f, cfg, terminal=False)
        want, n = oracles.ib_closure(f.id, paths, lengths, vcs)
        assert sorted(s.key for s in extract_ib_set(g, f, cfg)) == want
        assert len(g) == n
