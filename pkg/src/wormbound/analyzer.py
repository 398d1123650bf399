"""Per-flow end-to-end delay bounds.

The engine computes, for a flow and a prefix of its path, the left-over
service curve (R_f, T_P + T_DB + T_IB).  Bursts of interfering flows at the
point where they meet the flow under study come from the same computation on
the interferer's own prefix, so the whole thing is a memoised recursion.
"""
from __future__ import annotations

import csv
import enum
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable

from .bata import IBSet, bata_ib_set, bata_indirect_latency
from .gbata import construct_ib_graph, direct_vertex_excess, extract_ib_set, gbata_indirect_latency
from .interference import db_set, priority_view
from .netcalc import ServiceCurve, UnstableSystem, output_curve
from .platform import Config, Flow, NodeId

__all__ = [
    "Method",
    "RecursionCycle",
    "Instrumentation",
    "BoundDecomposition",
    "AnalysisReport",
    "Engine",
    "direct_blocking_latency",
    "end_to_end_service_curve",
    "analyze_flow",
    "analyze_all",
    "schedulability_check",
    "write_report_csv",
    "write_instrumentation_csv",
]


class Method(str, enum.Enum):
    BATA = "BATA"
    GBATA = "GBATA"

    @classmethod
    def parse(cls, s) -> "Method":
        if isinstance(s, cls):
            return s
        key = str(s).upper().replace("-", "").replace("_", "")
        return cls(key)


class RecursionCycle(RuntimeError):
    """A service-curve computation needed its own result (cyclic dependency)."""


@dataclass
class Instrumentation:
    n_e2e: int = 0
    n_iter: int = 0
    dt_total: float = 0.0
    dt_ib: float = 0.0
    dt_e2e: float = 0.0

    # bata_ib_set bumps this
    @property
    def iterations(self) -> int:
        return self.n_iter

    @iterations.setter
    def iterations(self, v: int):
        self.n_iter = v

    def merge(self, other: "Instrumentation") -> None:
        for k, v in asdict(other).items():
            setattr(self, k, getattr(self, k) + v)


@dataclass(frozen=True)
class BoundDecomposition:
    flow_id: int
    method: Method
    sigma: Fraction
    R_f: Fraction
    T_P: Fraction
    T_hp: Fraction
    T_sp: Fraction
    T_lp: Fraction
    T_IB: Fraction
    period: Fraction
    ib: IBSet = IBSet()

    @property
    def T_DB(self) -> Fraction:
        return self.T_hp + self.T_sp + self.T_lp

    @property
    def D_f(self) -> Fraction:
        return self.sigma / self.R_f + self.T_DB + self.T_IB + self.T_P

    @property
    def cpq_safe(self) -> bool:
        return self.method is Method.GBATA

    @property
    def schedulable(self) -> bool:
        return self.D_f <= self.period

    @property
    def curve(self) -> ServiceCurve:
        return ServiceCurve(self.R_f, self.T_P + self.T_DB + self.T_IB)


@dataclass
class AnalysisReport:
    method: Method
    bounds: dict[int, BoundDecomposition] = field(default_factory=dict)
    errors: dict[int, Exception] = field(default_factory=dict)
    instrumentation: Instrumentation = field(default_factory=Instrumentation)
    db_index: dict[int, int] = field(default_factory=dict)
    ib_index: dict[int, int] = field(default_factory=dict)

    @property
    def avg_db_index(self) -> float:
        return sum(self.db_index.values()) / len(self.db_index) if self.db_index else 0.0

    @property
    def avg_ib_index(self) -> float:
        return sum(self.ib_index.values()) / len(self.ib_index) if self.ib_index else 0.0

    def delay(self, fid: int) -> Fraction:
        return self.bounds[fid].D_f


@dataclass(frozen=True)
class _Terms:
    R_f: Fraction
    T_P: Fraction
    T_hp: Fraction
    T_sp: Fraction
    T_lp: Fraction
    T_IB: Fraction
    ib: IBSet

    @property
    def curve(self) -> ServiceCurve:
        return ServiceCurve(self.R_f, self.T_P + self.T_hp + self.T_sp + self.T_lp + self.T_IB)


class Engine:
    """Memoised end-to-end service-curve computation for one config and method.

    ``strict_tlp`` charges the full max same-or-lower packet length at every
    node instead of one flit of lower-priority blocking.  ``extended`` turns
    on the G-BATA safety terms (see gbata.direct_vertex_excess).
    """

    def __init__(self, config: Config, method=Method.GBATA, strict_tlp: bool = False,
                 instrumentation: Instrumentation | None = None, extended: bool = True):
        self.config = config
        self.method = Method.parse(method)
        self.strict_tlp = strict_tlp
        self.extended = extended
        self.stats = instrumentation if instrumentation is not None else Instrumentation()
        self._cache: dict[tuple[int, int], _Terms] = {}
        self._active: set[tuple[int, int]] = set()
        self._depth = 0
        self._ib_clock = 0.0

    # -- per-node helpers --------------------------------------------------

    def _slp_length(self, f: Flow, r: NodeId) -> Fraction:
        """Largest packet f can find ahead of it at r: max same-VC length, or
        one flit if only lower-priority traffic is there."""
        view = priority_view(f, self.config)
        best = Fraction(0)
        for i in self.config.flows_at.get(r, ()):
            if i in view.sp:
                best = max(best, Fraction(self.config.by_id[i].length))
            elif i in view.lp:
                best = max(best, self.config.noc.flit_size)
        return best

    def _lp_here(self, f: Flow, r: NodeId) -> bool:
        lp = priority_view(f, self.config).lp
        return any(i in lp for i in self.config.flows_at.get(r, ()))

    # -- bursts ---------------------------------------------------------------

    def burst_at(self, fid: int, node: NodeId) -> Fraction:
        """Burst of flow ``fid`` on arrival at ``node`` (a node on its path)."""
        fl = self.config.by_id[fid]
        idx = fl.index[node]
        if idx == 0:
            return fl.sigma
        beta = self.terms(fl, idx).curve
        return output_curve(fl.arrival, beta).sigma

    # -- the recursion ----------------------------------------------------------

    def terms(self, f: Flow, end: int | None = None) -> _Terms:
        end = len(f.path) if end is None else end
        if not 1 <= end <= len(f.path):
            raise ValueError(f"prefix end {end} outside 1..{len(f.path)} for flow {f.id}")
        self.stats.n_e2e += 1
        key = (f.id, end)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if key in self._active:
            raise RecursionCycle(f"service curve of flow {f.id} over its first {end} nodes "
                                 f"depends on itself")
        top = self._depth == 0
        if top:
            t0 = time.perf_counter()
            ib0 = self._ib_clock
        self._active.add(key)
        self._depth += 1
        try:
            out = self._compute(f, end)
        finally:
            self._depth -= 1
            self._active.discard(key)
        if top:
            self.stats.dt_e2e += (time.perf_counter() - t0) - (self._ib_clock - ib0)
        self._cache[key] = out
        return out

    def _compute(self, f: Flow, end: int) -> _Terms:
        cfg = self.config
        noc = cfg.noc
        prefix = f.path[:end]
        view = priority_view(f, cfg)
        by_id = cfg.by_id

        rate = None
        worst = None
        for r in prefix:
            load = sum((by_id[i].rho for i in cfg.flows_at.get(r, ()) if i in view.shp), Fraction(0))
            res = noc.params(r).rate - load
            if rate is None or res < rate:
                rate, worst = res, r
        if rate <= 0:
            raise UnstableSystem(f"flow {f.id}: residual rate {rate} at node {worst}",
                                 node=worst, residual=rate)

        t_p = sum((noc.params(r).latency for r in prefix), Fraction(0))
        ser = {r: noc.params(r).latency + self._slp_length(f, r) / noc.params(r).rate for r in prefix}

        t_hp = Fraction(0)
        t_sp = Fraction(0)
        for i in db_set(f, prefix, cfg):
            if i not in view.shp:
                continue
            fi = by_id[i]
            shared = [r for r in prefix if fi.crosses(r)]
            burst = self.burst_at(i, shared[0])
            term = (burst + fi.rho * sum(ser[r] for r in shared)) / rate
            if i in view.hp:
                t_hp += term
            else:
                t_sp += term

        if self.strict_tlp:
            t_lp = sum((self._slp_length(f, r) / noc.params(r).rate for r in prefix), Fraction(0))
        else:
            t_lp = sum((noc.flit_size / noc.params(r).rate for r in prefix if self._lp_here(f, r)),
                       Fraction(0))

        t0 = time.perf_counter()
        if self.method is Method.BATA:
            ib = bata_ib_set(f, prefix, cfg, counter=self.stats)
        else:
            graph = construct_ib_graph(f, cfg, end, terminal=self.extended)
            self.stats.n_iter += graph.levels
            ib = extract_ib_set(graph, f, cfg)
        self._ib_clock += time.perf_counter() - t0
        self.stats.dt_ib += time.perf_counter() - t0

        if self.method is Method.BATA:
            t_ib = bata_indirect_latency(f, ib, cfg, self.burst_at)
        else:
            t_ib = gbata_indirect_latency(f, ib, cfg, self.burst_at)
            if self.extended:
                t_ib += direct_vertex_excess(graph, f, cfg, self.burst_at)
        return _Terms(rate, t_p, t_hp, t_sp, t_lp, t_ib, ib)

    def analyze(self, f: Flow) -> BoundDecomposition:
        t = self.terms(f)
        return BoundDecomposition(f.id, self.method, f.sigma, t.R_f, t.T_P, t.T_hp, t.T_sp,
                                  t.T_lp, t.T_IB, f.period, t.ib)


def _prefix_end(f: Flow, prefix) -> int:
    if prefix is None:
        return len(f.path)
    if isinstance(prefix, int):
        return prefix
    prefix = tuple(prefix)
    if tuple(f.path[:len(prefix)]) != prefix:
        raise ValueError(f"not a prefix of flow {f.id}'s path")
    return len(prefix)


def end_to_end_service_curve(f: Flow, prefix, config: Config, method=Method.GBATA,
                             instrumentation: Instrumentation | None = None,
                             strict_tlp: bool = False) -> ServiceCurve:
    eng = Engine(config, method, strict_tlp, instrumentation)
    return eng.terms(f, _prefix_end(f, prefix)).curve


def direct_blocking_latency(f: Flow, config: Config, engine: Engine | None = None):
    """(T_hp, T_sp, T_lp, R_f) over f's whole path."""
    eng = engine or Engine(config)
    t = eng.terms(f)
    return t.T_hp, t.T_sp, t.T_lp, t.R_f


def analyze_flow(f: Flow, config: Config, method=Method.GBATA, strict_tlp: bool = False,
                 engine: Engine | None = None, extended: bool = True) -> BoundDecomposition:
    eng = engine or Engine(config, method, strict_tlp, extended=extended)
    return eng.analyze(f)


def analyze_all(config: Config, method=Method.GBATA, strict_tlp: bool = False,
                extended: bool = True) -> AnalysisReport:
    """Bound every flow; failures are recorded per flow, not raised.

    ``extended=False`` drops the two G-BATA safety terms (terminal-flow
    vertices and the other-VC excess of same-VC direct blockers).
    """
    method = Method.parse(method)
    rep = AnalysisReport(method)
    eng = Engine(config, method, strict_tlp, rep.instrumentation, extended)
    t0 = time.perf_counter()
    for f in sorted(config.flows, key=lambda f: f.id):
        rep.db_index[f.id] = len(db_set(f, f.path, config))
        try:
            b = eng.analyze(f)
        except (UnstableSystem, RecursionCycle) as exc:
            rep.errors[f.id] = exc
            continue
        rep.bounds[f.id] = b
        rep.ib_index[f.id] = len(b.ib)
    rep.instrumentation.dt_total = time.perf_counter() - t0
    return rep


def schedulability_check(report: AnalysisReport, config: Config) -> dict[int, bool]:
    out = {}
    for f in config.flows:
        b = report.bounds.get(f.id)
        out[f.id] = b is not None and b.D_f <= f.period
    return out


# -- CSV ------------------------------------------------------------------------

REPORT_COLUMNS = ["flow_id", "method", "T_P", "T_hp", "T_sp", "T_lp", "T_IB", "R_f", "D_f",
                  "period", "schedulable", "I_DB", "I_IB"]
INSTR_COLUMNS = ["method", "n_e2e", "n_iter", "dt_total", "dt_ib", "dt_e2e"]


def fmt(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{float(x):.9f}"


def report_rows(report: AnalysisReport) -> list[dict]:
    rows = []
    for fid, b in sorted(report.bounds.items()):
        rows.append({
            "flow_id": fid, "method": report.method.value,
            "T_P": fmt(b.T_P), "T_hp": fmt(b.T_hp), "T_sp": fmt(b.T_sp), "T_lp": fmt(b.T_lp),
            "T_IB": fmt(b.T_IB), "R_f": fmt(b.R_f), "D_f": fmt(b.D_f), "period": fmt(b.period),
            "schedulable": str(b.schedulable).lower(),
            "I_DB": report.db_index[fid], "I_IB": report.ib_index[fid],
        })
    return rows


def write_report_csv(reports: Iterable[AnalysisReport], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, REPORT_COLUMNS)
        w.writeheader()
        rows = [r for rep in reports for r in report_rows(rep)]
        rows.sort(key=lambda r: (r["flow_id"], r["method"]))
        w.writerows(rows)


def write_instrumentation_csv(reports: Iterable[AnalysisReport], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(INSTR_COLUMNS)
        for rep in reports:
            i = rep.instrumentation
            w.writerow([rep.method.value, i.n_e2e, i.n_iter, f"{i.dt_total:.6f}",
                        f"{i.dt_ib:.6f}", f"{i.dt_e2e:.6f}"])


def read_bounds_csv(path) -> dict[tuple[int, str], Fraction]:
    """(flow_id, method) -> D_f from a report CSV."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[(int(row["flow_id"]), row["method"].upper())] = Fraction(row["D_f"])
    return out
