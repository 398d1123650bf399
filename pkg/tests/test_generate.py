import pytest

from wormbound.generate import FAMILIES, GenerationExhausted, GeneratorSpec, generate, quadrant_of
from wormbound.interference import db_set
from wormbound.platform import validate


def avg_db(cfg):
    return sum(len(db_set(f, f.path, cfg)) for f in cfg.flows) / len(cfg.flows)


def test_seeded_determinism():
    a = generate(GeneratorSpec("uniform", 4, seed=9))
    b = generate(GeneratorSpec("uniform", 4, seed=9))
    c = generate(GeneratorSpec("uniform", 4, seed=10))
    assert a == b and a != c and len(a.flows) == 4 and not validate(a)


def test_quadrant_families():
    cfg = generate(GeneratorSpec("quadrant", 8, 8, 8, seed=2))
    rules = set(FAMILIES.values())
    for f in cfg.flows:
        assert (quadrant_of(f.src, 8, 8), quadrant_of(f.dst, 8, 8)) in rules


def test_quadrant_numbering():
    assert [quadrant_of(c, 4, 4) for c in [(3, 3), (0, 3), (0, 0), (3, 0)]] == [1, 2, 3, 4]


def test_quadrant_raises_direct_blocking():
    for w in (6, 8):
        uni = [avg_db(generate(GeneratorSpec("uniform", 32, w, w, seed=s))) for s in range(20)]
        quad = [avg_db(generate(GeneratorSpec("quadrant", 32, w, w, seed=s))) for s in range(20)]
        assert sum(quad) > sum(uni)


def test_spec_checks_and_exhaustion():
    with pytest.raises(ValueError):
        GeneratorSpec("uniform", 0)
    with pytest.raises(ValueError):
        GeneratorSpec("diagonal", 4)
    with pytest.raises(ValueError):
        GeneratorSpec("quadrant", 4, 1, 4)
    with pytest.raises(GenerationExhausted):
        generate(GeneratorSpec("uniform", 40, 2, 2, length=(8, 8), period=(10, 10), max_retries=20))
