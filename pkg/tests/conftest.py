import sys
from pathlib import Path

import pytest

from wormbound.platform import Config, Flow, NocModel, NodeParams, load_config, xy_route

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
sys.path.insert(0, str(Path(__file__).parent))


def fixture(name: str) -> Config:
    return load_config(FIXTURES / f"{name}.json")


def mesh(w=4, h=4, rate=1, latency=1, buffer=1, vcs=1, overrides=None) -> NocModel:
    return NocModel(w, h, NodeParams(rate, latency, buffer), overrides or {}, 1, vcs)


def flow(noc, fid, src, dst, length=3, period=60, burst=1, jitter=0, vc=0, path=None) -> Flow:
    return Flow(fid, src, dst, length, period, burst, jitter, vc,
                tuple(path) if path is not None else tuple(xy_route(noc, src, dst)))


@pytest.fixture
def chained():
    return fixture("chained")


@pytest.fixture
def cpq():
    return fixture("cpq")


@pytest.fixture
def cpq_burst2():
    return fixture("cpq_burst2")


@pytest.fixture
def exclusive_vc():
    return fixture("exclusive_vc_4x4")


@pytest.fixture
def sensitivity():
    return fixture("sensitivity_6x6")
