"""Seeded random flow sets: uniform endpoints or quadrant families."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .platform import Config, Flow, NocModel, NodeParams, validate, xy_route

__all__ = ["GeneratorSpec", "GenerationExhausted", "generate", "quadrant_of", "FAMILIES"]


class GenerationExhausted(RuntimeError):
    pass


# quadrants numbered counter-clockwise from the north-east one (y grows north)
FAMILIES = {"A": (3, 4), "B": (4, 1), "C": (2, 1)}


@dataclass(frozen=True)
class GeneratorSpec:
    paradigm: str = "uniform"
    n_flows: int = 8
    width: int = 4
    height: int = 4
    length: tuple[int, int] = (2, 8)
    period: tuple[int, int] = (100, 400)
    burst: tuple[int, int] = (1, 1)
    jitter: tuple[int, int] = (0, 0)
    vc_count: int = 1
    buffer: int = 1
    seed: int = 0
    max_retries: int = 200

    def __post_init__(self):
        if self.n_flows < 1:
            raise ValueError("need at least one flow")
        if self.paradigm not in ("uniform", "quadrant"):
            raise ValueError(f"unknown paradigm {self.paradigm!r}")
        if self.width * self.height < 2:
            raise ValueError("grid too small for any flow")
        if self.paradigm == "quadrant" and (self.width < 2 or self.height < 2):
            raise ValueError("quadrant paradigm needs a grid of at least 2x2")


def quadrant_of(core, width: int, height: int) -> int:
    x, y = core
    east = x >= width // 2
    north = y >= height // 2
    if north:
        return 1 if east else 2
    return 4 if east else 3


def _cell_in(q: int, w: int, h: int, rng: random.Random):
    xs = range(w // 2, w) if q in (1, 4) else range(0, w // 2)
    ys = range(h // 2, h) if q in (1, 2) else range(0, h // 2)
    return (rng.choice(xs), rng.choice(ys))


def _endpoints(spec: GeneratorSpec, rng: random.Random):
    w, h = spec.width, spec.height
    while True:
        if spec.paradigm == "uniform":
            s = (rng.randrange(w), rng.randrange(h))
            d = (rng.randrange(w), rng.randrange(h))
        else:
            qs, qd = FAMILIES[rng.choice("ABC")]
            s, d = _cell_in(qs, w, h, rng), _cell_in(qd, w, h, rng)
        if s != d:
            return s, d


def generate(spec: GeneratorSpec) -> Config:
    """Draw flows one by one, redrawing any flow that overloads a link."""
    rng = random.Random(spec.seed)
    noc = NocModel(spec.width, spec.height, NodeParams(1, 1, spec.buffer), {}, 1, spec.vc_count)
    flows: list[Flow] = []
    for fid in range(1, spec.n_flows + 1):
        for _ in range(spec.max_retries):
            s, d = _endpoints(spec, rng)
            f = Flow(fid, s, d, rng.randint(*spec.length), Fraction(rng.randint(*spec.period)),
                     rng.randint(*spec.burst), Fraction(rng.randint(*spec.jitter)),
                     rng.randrange(spec.vc_count), tuple(xy_route(noc, s, d)))
            if not validate(Config(noc, flows + [f])):
                flows.append(f)
                break
        else:
            raise GenerationExhausted(f"could not place flow {fid} without overloading a link "
                                      f"after {spec.max_retries} draws")
    return Config(noc, flows)
