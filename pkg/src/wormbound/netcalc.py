"""Affine min-plus algebra: leaky-bucket arrivals, rate-latency services.

Everything is kept in :class:`fractions.Fraction` so that chained burst
propagation reproduces hand-computed values without drift.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

__all__ = [
    "UnstableSystem",
    "ArrivalCurve",
    "ServiceCurve",
    "DelayBound",
    "NodeLoad",
    "Interferer",
    "to_fraction",
    "horizontal_deviation",
    "backlog_bound",
    "output_curve",
    "convolve",
    "pmoo_leftover",
]


def to_fraction(x) -> Fraction:
    """Exact conversion; floats go through their shortest repr (0.95 -> 19/20)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(str(x))


class UnstableSystem(ArithmeticError):
    """Residual service rate is not enough to carry the offered load."""

    def __init__(self, message: str, node=None, residual=None):
        super().__init__(message)
        self.node = node
        self.residual = residual


@dataclass(frozen=True)
class ArrivalCurve:
    sigma: Fraction
    rho: Fraction

    def __post_init__(self):
        object.__setattr__(self, "sigma", to_fraction(self.sigma))
        object.__setattr__(self, "rho", to_fraction(self.rho))
        if self.sigma < 0 or self.rho < 0:
            raise ValueError(f"arrival curve needs sigma, rho >= 0, got {self}")

    def __call__(self, t) -> Fraction:
        t = to_fraction(t)
        return Fraction(0) if t <= 0 else self.sigma + self.rho * t


@dataclass(frozen=True)
class ServiceCurve:
    rate: Fraction
    latency: Fraction

    def __post_init__(self):
        object.__setattr__(self, "rate", to_fraction(self.rate))
        object.__setattr__(self, "latency", to_fraction(self.latency))
        if self.rate <= 0:
            raise UnstableSystem(f"service rate must be positive, got {self.rate}",
                                 residual=self.rate)
        if self.latency < 0:
            raise ValueError(f"service latency must be >= 0, got {self.latency}")

    def __call__(self, t) -> Fraction:
        t = to_fraction(t)
        return self.rate * max(Fraction(0), t - self.latency)


@dataclass(frozen=True, order=True)
class DelayBound:
    cycles: Fraction

    def __post_init__(self):
        object.__setattr__(self, "cycles", to_fraction(self.cycles))
        if self.cycles < 0:
            raise ValueError("negative delay bound")

    def __float__(self):
        return float(self.cycles)


def _check_stable(alpha: ArrivalCurve, beta: ServiceCurve) -> None:
    if alpha.rho > beta.rate:
        raise UnstableSystem(
            f"arrival rate {alpha.rho} exceeds service rate {beta.rate}",
            residual=beta.rate - alpha.rho,
        )


def horizontal_deviation(alpha: ArrivalCurve, beta: ServiceCurve) -> DelayBound:
    _check_stable(alpha, beta)
    return DelayBound(alpha.sigma / beta.rate + beta.latency)


def backlog_bound(alpha: ArrivalCurve, beta: ServiceCurve) -> Fraction:
    _check_stable(alpha, beta)
    return alpha.sigma + alpha.rho * beta.latency


def output_curve(alpha: ArrivalCurve, beta: ServiceCurve) -> ArrivalCurve:
    """Deconvolution alpha (/) beta for the affine / rate-latency pair."""
    _check_stable(alpha, beta)
    return ArrivalCurve(alpha.sigma + alpha.rho * beta.latency, alpha.rho)


def convolve(*betas: ServiceCurve) -> ServiceCurve:
    """Min-plus convolution of rate-latency curves (nodes in tandem)."""
    if not betas:
        raise ValueError("need at least one service curve")
    return ServiceCurve(min(b.rate for b in betas), sum((b.latency for b in betas), Fraction(0)))


@dataclass(frozen=True)
class NodeLoad:
    """One node of a path as seen by the flow under study.

    ``cross_rate`` is the summed rate of competing flows the node must also
    serve (same-or-higher priority), ``blocking`` an extra per-node latency
    term such as a non-preemptable packet or flit of lower priority.
    """

    rate: Fraction
    latency: Fraction
    cross_rate: Fraction = Fraction(0)
    blocking: Fraction = Fraction(0)
    name: object = None


@dataclass(frozen=True)
class Interferer:
    """A competing flow entering the path once, at its convergence node.

    ``serialization`` is the sum over the shared nodes of the per-node
    latency the competing flow's traffic is charged (T + L/R style terms).
    """

    burst: Fraction
    rho: Fraction
    serialization: Fraction
    name: object = None


def pmoo_leftover(path_nodes: Sequence[NodeLoad], interferers: Iterable[Interferer] = ()) -> ServiceCurve:
    """Left-over rate-latency curve over a whole path, bursts paid once.

    rate    = min_r (R^r - cross_rate^r)
    latency = sum_r (T^r + blocking^r) + sum_i (burst_i + rho_i * ser_i) / rate
    """
    if not path_nodes:
        raise ValueError("empty path")
    rate = None
    worst = None
    for n in path_nodes:
        residual = to_fraction(n.rate) - to_fraction(n.cross_rate)
        if rate is None or residual < rate:
            rate, worst = residual, n
    if rate <= 0:
        raise UnstableSystem(f"residual rate {rate} at node {worst.name}", node=worst.name, residual=rate)
    latency = sum((to_fraction(n.latency) + to_fraction(n.blocking) for n in path_nodes), Fraction(0))
    for i in interferers:
        latency += (to_fraction(i.burst) + to_fraction(i.rho) * to_fraction(i.serialization)) / rate
    return ServiceCurve(rate, latency)
