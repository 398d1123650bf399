"""Independent re-derivations used to pin derived values.

Nothing here imports the analysis modules; inputs are plain tuples so the
oracles cannot share a bug with the code under test.
"""
from fractions import Fraction

STEP = {"E": (1, 0), "W": (-1, 0), "N": (0, 1), "S": (0, -1)}


def xy_hops(src, dst):
    """Route by counting hops: |dx| horizontal outputs, then |dy| vertical, then Local."""
    (x0, y0), (x1, y1) = src, dst
    hx = "E" if x1 > x0 else "W"
    hy = "N" if y1 > y0 else "S"
    out = [(x0 + STEP[hx][0] * i, y0, hx) for i in range(abs(x1 - x0))]
    out += [(x1, y0 + STEP[hy][1] * j, hy) for j in range(abs(y1 - y0))]
    return out + [(x1, y1, "L")]


def spread(length, buffers):
    """Fill buffers one by one until the packet fits (or the path runs out)."""
    held = 0
    for n, b in enumerate(buffers, start=1):
        held += b
        if held >= length:
            return n
    return len(buffers)


def shared(p, q):
    return set(map(tuple, p)) & set(map(tuple, q))


def db_pairs(paths):
    """{f: {i: shares a node}} by pairwise set intersection."""
    return {f: {i for i, q in paths.items() if i != f and shared(p, q)} for f, p in paths.items()}


def sub_after(kpath, ref, length, buffer_of):
    """Nodes of kpath after its last node in ref, as long as one packet spreads."""
    ref = set(map(tuple, ref))
    last = max((i for i, n in enumerate(kpath) if tuple(n) in ref), default=None)
    if last is None or last == len(kpath) - 1:
        return None
    rest = kpath[last + 1:]
    n = spread(length, [buffer_of(r) for r in rest])
    return last + 1, tuple(map(tuple, rest[:n]))


def ib_closure(fid, paths, lengths, vcs, buffer_of=lambda r: 1):
    """Breadth-first G-BATA vertex closure without terminal vertices,
    returning the IB flow/subpath keys and the vertex count."""
    root = (fid, 0, len(paths[fid]))
    nodes = {root: tuple(map(tuple, paths[fid]))}
    frontier = [root]
    while frontier:
        nxt = []
        for v in frontier:
            vflow, vpath = v[0], nodes[v]
            for k in sorted(paths):
                if vcs[k] != vcs[vflow]:
                    continue
                if k != vflow and not shared(paths[k], vpath):
                    continue
                got = sub_after([tuple(n) for n in paths[k]], vpath, lengths[k], buffer_of)
                if got is None:
                    continue
                key = (k, got[0], len(got[1]))
                if key not in nodes:
                    nodes[key] = got[1]
                    nxt.append(key)
        frontier = nxt
    db = {i for i in paths if i != fid and shared(paths[i], paths[fid])} | {fid}
    ib = sorted(k for k in nodes if k != root and k[0] not in db)
    return ib, len(nodes)


def rate_latency_vc(nodes, hp, lp_nodes, flit=1):
    """(rate, latency) of a VC over uniform R=1/T=1 nodes.

    hp: list of (rho, burst, crossed node indexes); lp_nodes: node indexes
    where some lower-priority flow is present."""
    rate = min(Fraction(1) - sum((rho for rho, _, xs in hp if r in xs), Fraction(0))
               for r in range(len(nodes)))
    per = [Fraction(1) + (Fraction(flit) if r in lp_nodes else 0) for r in range(len(nodes))]
    lat = sum(per, Fraction(0))
    for rho, burst, xs in hp:
        lat += (Fraction(burst) + rho * sum(per[r] for r in xs)) / rate
    return rate, lat


def isolated_delay(n_nodes, length, latency=1, rate=1):
    """Head crosses n_nodes pipeline stages; the tail trails length-1 slots behind."""
    return n_nodes * latency + Fraction(length, rate)
