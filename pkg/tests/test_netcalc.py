from fractions import Fraction

import pytest

import frozen
from wormbound.netcalc import (
    ArrivalCurve,
    Interferer,
    NodeLoad,
    ServiceCurve,
    UnstableSystem,
    backlog_bound,
    convolve,
    horizontal_deviation,
    output_curve,
    pmoo_leftover,
    to_fraction,
)

F = Fraction
RHO = F(1, 20)


def test_horizontal_deviation():
    assert horizontal_deviation(ArrivalCurve(3, RHO), ServiceCurve(1, 3)).cycles == 6
    assert horizontal_deviation(ArrivalCurve(0, 0), ServiceCurve(1, 0)).cycles == 0
    assert horizontal_deviation(ArrivalCurve(5, F(1, 4)), ServiceCurve(2, 4)).cycles == frozen.HDEV_5_QUARTER_2_4


def test_backlog():
    assert backlog_bound(ArrivalCurve(3, RHO), ServiceCurve(1, 2)) == F(31, 10)
    assert backlog_bound(ArrivalCurve(0, 0), ServiceCurve(1, 7)) == 0
    got = backlog_bound(ArrivalCurve(6, RHO), ServiceCurve(F(19, 20), F(124, 19)))
    assert got == frozen.BACKLOG_6_ON_124_19
    assert float(got) == pytest.approx(6.326315789, abs=1e-9)


def test_output_curve():
    assert output_curve(ArrivalCurve(3, RHO), ServiceCurve(1, 2)) == ArrivalCurve(F(31, 10), RHO)
    assert output_curve(ArrivalCurve(4, RHO), ServiceCurve(1, 0)) == ArrivalCurve(4, RHO)
    beta = ServiceCurve(F(19, 20), 3 + (F(31, 10) + RHO * 4) / F(19, 20))
    out = output_curve(ArrivalCurve(3, RHO), beta)
    assert float(out.sigma) == pytest.approx(3.323684211, abs=1e-9)
    assert out.rho == RHO


def test_unstable():
    with pytest.raises(UnstableSystem):
        horizontal_deviation(ArrivalCurve(1, 2), ServiceCurve(1, 0))
    with pytest.raises(UnstableSystem) as e:
        pmoo_leftover([NodeLoad(1, 1, F(6, 5), name="r0")])
    assert e.value.node == "r0" and e.value.residual == F(-1, 5)


def test_invalid_curves():
    with pytest.raises(ValueError):
        ArrivalCurve(-1, 0)
    with pytest.raises(UnstableSystem):
        ServiceCurve(0, 1)


def test_pmoo_examples():
    nodes3 = [NodeLoad(1, 1, RHO) for _ in range(3)]
    beta = pmoo_leftover(nodes3, [Interferer(F(31, 10), RHO, 4)])
    assert beta == ServiceCurve(F(19, 20), 3 + (F(31, 10) + RHO * 4) / F(19, 20))
    assert pmoo_leftover([NodeLoad(1, 1)] * 4) == ServiceCurve(1, 4)
    s3 = F(3323684211, 10 ** 9)
    beta = pmoo_leftover([NodeLoad(1, 1, RHO)], [Interferer(s3, RHO, 4)])
    assert beta.rate == F(19, 20)
    assert float(beta.latency) == pytest.approx(1 + 3.523684211 / 0.95, abs=1e-9)


def test_convolve_and_values():
    assert convolve(ServiceCurve(2, 1), ServiceCurve(1, 3)) == ServiceCurve(1, 4)
    assert ServiceCurve(2, 3)(5) == 4 and ServiceCurve(2, 3)(1) == 0
    assert ArrivalCurve(3, RHO)(20) == 4
    assert to_fraction("0.05") == RHO and to_fraction(0.5) == F(1, 2)
