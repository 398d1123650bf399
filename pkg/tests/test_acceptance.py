"""Acceptance criteria 1-7. Each test prints one PASS/FAIL line (shown even
under capture) and checks its runtime budget."""
import subprocess
import sys
import time
from contextlib import contextmanager

import pytest

from conftest import ROOT, fixture
from wormbound.analyzer import Engine, analyze_all, analyze_flow
from wormbound.bata import bata_ib_set
from wormbound.gbata import construct_ib_graph, extract_ib_set
from wormbound.generate import GeneratorSpec, generate
from wormbound.platform import NodeId
from wormbound.sim import tightness_sweep


def close(x, v):
    return abs(float(x) - v) < 1e-9


@contextmanager
def criterion(capsys, n, title, budget):
    notes = []
    t0 = time.perf_counter()
    err = None
    try:
        yield notes
    except AssertionError as e:
        err = e
    dt = time.perf_counter() - t0
    ok = err is None and dt < budget
    extra = f"; {'; '.join(notes)}" if notes else ""
    why = f" [{err}]" if err is not None else ("" if ok else f" [over {budget} s budget]")
    with capsys.disabled():
        print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'}: {title} ({dt:.2f} s{extra}){why}")
    if err is not None:
        raise err
    assert dt < budget, f"criterion {n} took {dt:.1f} s, budget {budget} s"


def test_1_worked_values(capsys):
    with criterion(capsys, 1, "worked-example values", 1.0):
        chained, burst2 = fixture("chained"), fixture("cpq_burst2")
        for m in ("BATA", "GBATA"):
            b = analyze_flow(chained.by_id[1], chained, m)
            assert close(b.T_P + b.T_DB, 7.368421053), "recap T_P + T_DB"
            b = analyze_flow(burst2.by_id[1], burst2, m)
            assert close(b.T_P + b.T_DB, 10.526315789), "burst-2 T_P + T_DB"
        eng = Engine(chained, "BATA")
        chain = [eng.burst_at(1, NodeId(2, 0, "E")), eng.burst_at(2, NodeId(5, 0, "N")),
                 eng.burst_at(3, NodeId(5, 1, "N"))]
        assert [round(float(x), 9) for x in chain] == [3.1, 3.323684211, 3.235457064], "burst chain"
        assert close(eng.analyze(chained.by_id[1]).T_IB, 6.235457064), "BATA T_IB"


def test_2_ib_sets(capsys):
    with criterion(capsys, 2, "IB sets and G-BATA chain graph", 1.0):
        chained, cpq = fixture("chained"), fixture("cpq")
        f = chained.by_id[1]
        assert [s.label() for s in bata_ib_set(f, f.path, chained)] == ["3:1+3"]
        f = cpq.by_id[1]
        assert not bata_ib_set(f, f.path, cpq), "BATA IB on CPQ should be empty"
        g = construct_ib_graph(f, cpq)
        assert [v.label() for v in g.vertices.values()] == ["1:0+4", "2:1+3", "2:4+2", "3:1+3", "3:4+3"]
        keys = list(g.vertices)
        assert g.edges() == [(keys[i + 1], keys[i]) for i in range(4)], "chain edges"
        assert [s.label() for s in extract_ib_set(g, f, cpq)] == ["3:1+3", "3:4+3"]


def test_3_exclusive_vcs(capsys):
    with criterion(capsys, 3, "exclusive-VC equivalence", 5.0) as notes:
        cfg = fixture("exclusive_vc_4x4")
        b, g = analyze_all(cfg, "BATA"), analyze_all(cfg, "GBATA")
        assert not b.errors and not g.errors
        assert b.bounds.keys() == g.bounds.keys() == cfg.by_id.keys()
        for fid in cfg.by_id:
            assert b.bounds[fid].D_f == g.bounds[fid].D_f, f"flow {fid} differs"
            assert b.bounds[fid].T_IB == g.bounds[fid].T_IB == 0, f"flow {fid} has T_IB"
        notes.append(f"{len(cfg.flows)} flows")


def test_4_complexity_counters(capsys):
    with criterion(capsys, 4, "n_e2e(BATA) >= n_e2e(GBATA), graph size bound", 120.0) as notes:
        ratios, bata_cycles = [], 0
        for n in (16, 32):
            for seed in range(20):
                cfg = generate(GeneratorSpec("uniform", n, 8, 8, seed=seed))
                b, g = analyze_all(cfg, "BATA"), analyze_all(cfg, "GBATA")
                nb, ng = b.instrumentation.n_e2e, g.instrumentation.n_e2e
                assert nb >= ng, f"{n} flows seed {seed}: {nb} < {ng}"
                assert not g.errors
                bata_cycles += bool(b.errors)
                bound = 1 + sum(len(f.path) for f in cfg.flows)
                for f in cfg.flows:
                    assert len(construct_ib_graph(f, cfg)) <= bound
                ratios.append(nb / ng)
        notes.append(f"mean n_e2e ratio {sum(ratios) / len(ratios):.2f}")
        notes.append(f"BATA hit a recursion cycle in {bata_cycles}/40 configs")


SAFETY_CONFIGS = ["chained", "cpq", "cpq_burst2"] + [f"uniform-{s}" for s in range(10)]


def test_5_safety(capsys):
    with criterion(capsys, 5, "zero safety violations, 13 configs x 500 runs", 300.0) as notes:
        taus, bad = [], []
        for name in SAFETY_CONFIGS:
            if name.startswith("uniform-"):
                cfg = generate(GeneratorSpec("uniform", 8, 4, 4, seed=int(name.split("-")[1])))
            else:
                cfg = fixture(name)
            rep = analyze_all(cfg, "GBATA")
            assert not rep.errors
            res = tightness_sweep(cfg, rep, runs=500, seed=0, raise_on_violation=False)
            bad += [f"{name}: {v}" for v in res.violations]
            taus.append(res.average_ratio)
        notes.append(f"avg tightness {sum(taus) / len(taus):.3f}")
        assert not bad, f"{len(bad)} violations, first {bad[0]}"


def test_6_buffer_saturation(capsys):
    with criterion(capsys, 6, "bounds constant once buffers hold a packet", 30.0) as notes:
        cfg = fixture("sensitivity_6x6")
        max_len = max(f.length for f in cfg.flows)
        for m in ("BATA", "GBATA"):
            seen, failed = {}, []
            for buf in (1, 2, 3, 4, 8, 16, 32):
                rep = analyze_all(cfg.with_noc(cfg.noc.with_buffer(buf)), m)
                if rep.errors:
                    # tiny buffers can close a dependency cycle that BATA cannot resolve
                    assert buf < max_len and m == "BATA", f"{m} B={buf}: {rep.errors}"
                    failed.append(buf)
                    continue
                seen[buf] = {fid: b.D_f for fid, b in rep.bounds.items()}
            sat = [seen[b] for b in seen if b >= max_len]
            assert len(sat) == 4 and all(s == sat[0] for s in sat), f"{m} bounds move past B={max_len}"
            note = f"{m} saturated max D_f {float(max(sat[0].values())):.2f}"
            if failed:
                note += f", recursion cycle at B={failed}"
            elif 1 in seen:
                note += f" vs {float(max(seen[1].values())):.2f} at B=1"
            notes.append(note)


def test_7_property_suites(capsys):
    with criterion(capsys, 7, "standalone property suites", 120.0):
        r = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                            str(ROOT / "tests" / "test_properties.py")],
                           cwd=ROOT, capture_output=True, text=True)
        assert r.returncode == 0, r.stdout[-2000:]
