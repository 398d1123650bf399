"""Regenerate the JSON fixtures in this directory.

    python fixtures/build_fixtures.py
"""
import json
import random
from pathlib import Path

from wormbound.platform import Config, Flow, NocModel, NodeParams, save_config, validate, xy_route

HERE = Path(__file__).parent


def _mesh(w, h, buffer=1, vcs=1):
    return NocModel(w, h, NodeParams(1, 1, buffer), {}, 1, vcs)


def _flows(noc, spec, length=3, period=60, burst=1):
    return [Flow(i, s, d, length, period, burst, 0, 0, xy_route(noc, s, d))
            for i, (s, d) in enumerate(spec, start=1)]


def chained(burst=1):
    """Three flows chained head to tail: 1 meets 2, 2 meets 3, 1 never meets 3."""
    noc = _mesh(6, 4)
    spec = [((0, 0), (3, 0)), ((2, 0), (5, 1)), ((5, 0), (5, 3))]
    return Config(noc, _flows(noc, spec, burst=burst))


def cpq(burst=1):
    """Same chain stretched so flow 2's own next packet is the only link to flow 3."""
    noc = _mesh(7, 7)
    spec = [((0, 0), (3, 0)), ((2, 0), (6, 1)), ((6, 0), (6, 6))]
    return Config(noc, _flows(noc, spec, burst=burst))


def sensitivity(buffer=1, length=4, period=100):
    noc = _mesh(6, 6, buffer)
    spec = [((0, 5), (5, 4)), ((1, 5), (2, 3)), ((2, 5), (3, 2)), ((3, 5), (4, 3)),
            ((5, 5), (5, 1)), ((2, 4), (2, 1)), ((2, 2), (2, 0)), ((3, 4), (3, 1)),
            ((3, 3), (3, 0)), ((4, 4), (4, 1)), ((4, 2), (4, 0)), ((5, 2), (5, 0))]
    return Config(noc, _flows(noc, spec, length, period))


def exclusive_vc(seed=7, n=12, vcs=4):
    """4x4 mesh where no two flows on the same VC ever cross the same node."""
    rng = random.Random(seed)
    noc = _mesh(4, 4, buffer=2, vcs=vcs)
    flows = []
    while len(flows) < n:
        s = (rng.randrange(4), rng.randrange(4))
        d = (rng.randrange(4), rng.randrange(4))
        if s == d:
            continue
        path = xy_route(noc, s, d)
        used = {f.vc for f in flows if set(f.path) & set(path)}
        free = [v for v in range(vcs) if v not in used]
        if not free:
            continue
        flows.append(Flow(len(flows) + 1, s, d, 4, 80, 1, 0, rng.choice(free), path))
    cfg = Config(noc, flows, tuple(range(vcs)))
    assert not validate(cfg)
    return cfg


def main():
    out = {
        "chained.json": chained(),
        "cpq.json": cpq(),
        "cpq_burst2.json": cpq(burst=2),
        "sensitivity_6x6.json": sensitivity(),
        "exclusive_vc_4x4.json": exclusive_vc(),
    }
    for name, cfg in out.items():
        assert not validate(cfg), name
        save_config(cfg, HERE / name)
    print(json.dumps(sorted(out)))


if __name__ == "__main__":
    main()
