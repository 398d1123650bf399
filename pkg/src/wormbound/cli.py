"""Command-line front end.

Exit codes: 1 invalid config, 2 unstable system, 3 simulated delay above a bound.
"""
from __future__ import annotations

import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

import click

from .analyzer import (
    AnalysisReport,
    Method,
    analyze_all,
    fmt,
    read_bounds_csv,
    write_instrumentation_csv,
    write_report_csv,
)
from .gbata import construct_ib_graph, to_dot
from .generate import GenerationExhausted, GeneratorSpec, generate
from .netcalc import UnstableSystem
from .platform import ConfigError, load_config, save_config, validate

EXIT_INVALID = 1
EXIT_UNSTABLE = 2
EXIT_UNSAFE = 3


def _load(path):
    try:
        cfg = load_config(path)
    except (ConfigError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INVALID)
    problems = validate(cfg)
    if problems:
        for p in problems:
            click.echo(f"invalid: {p}", err=True)
        unstable = all(p.kind == "over-utilization" for p in problems)
        sys.exit(EXIT_UNSTABLE if unstable else EXIT_INVALID)
    return cfg


def _methods(name: str) -> list[Method]:
    return [Method.BATA, Method.GBATA] if name == "both" else [Method.parse(name)]


def _run(cfg, methods, strict_tlp, extended=True) -> list[AnalysisReport]:
    reports = [analyze_all(cfg, m, strict_tlp, extended) for m in methods]
    code = 0
    for rep in reports:
        for fid, exc in sorted(rep.errors.items()):
            click.echo(f"{rep.method.value} flow {fid}: {type(exc).__name__}: {exc}", err=True)
            if isinstance(exc, UnstableSystem):
                code = EXIT_UNSTABLE
    if code:
        sys.exit(code)
    return reports


def _instr_path(out: Path) -> Path:
    return out.with_name(out.stem + "_instrumentation" + out.suffix)


def _summary(reports):
    for rep in reports:
        i = rep.instrumentation
        ok = sum(b.schedulable for b in rep.bounds.values())
        click.echo(f"{rep.method.value}: {len(rep.bounds)} flows bounded, {len(rep.errors)} failed, "
                   f"{ok} schedulable; avg I_DB {rep.avg_db_index:.2f}, avg I_IB {rep.avg_ib_index:.2f}; "
                   f"n_e2e {i.n_e2e}, n_iter {i.n_iter}, {i.dt_total * 1e3:.1f} ms")


config_opt = click.option("--config", "config_path", required=True,
                          type=click.Path(dir_okay=False), help="NoC/flow config (JSON).")
out_opt = click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV output path.")
strict_opt = click.option("--strict-tlp", is_flag=True,
                          help="Charge max same-or-lower packet length per node in T_lp.")
plain_opt = click.option("--no-extensions", "plain", is_flag=True,
                         help="G-BATA without the terminal-flow and other-VC blocker terms.")
jobs_opt = click.option("--jobs", type=int, default=1, show_default=True, help="Worker threads.")


@click.group()
def main():
    """Worst-case delay bounds for wormhole NoCs."""


@main.command()
@config_opt
@click.option("--method", type=click.Choice(["bata", "gbata", "both"], case_sensitive=False),
              default="gbata", show_default=True)
@out_opt
@strict_opt
@plain_opt
@jobs_opt
def analyze(config_path, method, out, strict_tlp, plain, jobs):
    """Bound every flow of a config."""
    cfg = _load(config_path)
    reports = _run(cfg, _methods(method.lower()), strict_tlp, not plain)
    for rep in reports:
        for fid, b in sorted(rep.bounds.items()):
            flag = "" if b.cpq_safe else "  (valid only without consecutive-packet queuing)"
            click.echo(f"{rep.method.value:5s} flow {fid:3d}: D = {float(b.D_f):.6f}  "
                       f"(T_P {float(b.T_P):.3f}, T_DB {float(b.T_DB):.3f}, T_IB {float(b.T_IB):.3f})"
                       f"{flag}")
    _summary(reports)
    if out:
        write_report_csv(reports, out)
        write_instrumentation_csv(reports, _instr_path(Path(out)))


COMPARE_COLUMNS = ["flow_id", "D_BATA", "D_GBATA", "ratio_GBATA_BATA", "T_IB_BATA", "T_IB_GBATA",
                   "I_IB_BATA", "I_IB_GBATA", "cpq_safe_BATA", "cpq_safe_GBATA"]


@main.command()
@config_opt
@out_opt
@strict_opt
@plain_opt
@jobs_opt
def compare(config_path, out, strict_tlp, plain, jobs):
    """Side-by-side bounds of both methods."""
    cfg = _load(config_path)
    bata, gbata = _run(cfg, [Method.BATA, Method.GBATA], strict_tlp, not plain)
    bata_safe = not any(f.burst > 1 for f in cfg.flows)
    rows = []
    for f in sorted(cfg.flows, key=lambda f: f.id):
        a, g = bata.bounds.get(f.id), gbata.bounds.get(f.id)
        rows.append({
            "flow_id": f.id,
            "D_BATA": fmt(a.D_f) if a else "",
            "D_GBATA": fmt(g.D_f) if g else "",
            "ratio_GBATA_BATA": f"{float(g.D_f / a.D_f):.6f}" if a and g else "",
            "T_IB_BATA": fmt(a.T_IB) if a else "",
            "T_IB_GBATA": fmt(g.T_IB) if g else "",
            "I_IB_BATA": len(a.ib) if a else "",
            "I_IB_GBATA": len(g.ib) if g else "",
            "cpq_safe_BATA": str(bata_safe).lower(),
            "cpq_safe_GBATA": "true",
        })
        click.echo(f"flow {f.id:3d}: BATA {rows[-1]['D_BATA'] or 'n/a':>14s}  "
                   f"GBATA {rows[-1]['D_GBATA'] or 'n/a':>14s}")
    if not bata_safe:
        click.echo("note: some flow sends bursts, BATA bounds are not safe here")
    _summary([bata, gbata])
    if out:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, COMPARE_COLUMNS)
            w.writeheader()
            w.writerows(rows)
        write_instrumentation_csv([bata, gbata], _instr_path(Path(out)))


@main.command()
@config_opt
@click.option("--bounds", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Report CSV from 'analyze'; computed on the fly if omitted.")
@click.option("--method", type=click.Choice(["bata", "gbata"], case_sensitive=False), default="gbata",
              show_default=True)
@click.option("--runs", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--schedule", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Schedule JSON: seed, runs, horizon, offsets.")
@click.option("--trace", type=click.Path(dir_okay=False), default=None,
              help="Write a flit trace CSV of the first run.")
@out_opt
@jobs_opt
def simulate(config_path, bounds, method, runs, seed, schedule, trace, out, jobs):
    """Random-offset simulations checked against analytic bounds."""
    from .sim import SafetyViolation, compile_config, load_schedule, tightness_sweep
    from .sim import simulate as run_once
    from .sim import write_trace_csv

    cfg = _load(config_path)
    m = Method.parse(method)
    if bounds:
        table = read_bounds_csv(bounds)
        bd = {fid: d for (fid, meth), d in table.items() if meth == m.value}
    else:
        bd = {fid: b.D_f for fid, b in _run(cfg, [m], False)[0].bounds.items()}
    horizon = None
    if schedule:
        sch = load_schedule(schedule)
        seed, runs, horizon = sch.seed, sch.runs, sch.horizon
        if sch.offsets:
            r = run_once(cfg, sch)
            res_max = r.max_delay
            bad = [f for f, d in res_max.items() if f in bd and d > bd[f]]
            for f in sorted(res_max):
                click.echo(f"flow {f:3d}: max delay {res_max[f]}  bound {float(bd.get(f, 0)):.6f}")
            sys.exit(EXIT_UNSAFE if bad else 0)
    if trace:
        cn = compile_config(cfg)
        from .sim.simulator import TrafficSchedule
        write_trace_csv(run_once(cfg, TrafficSchedule(seed=seed, horizon=horizon), compiled=cn, trace=True),
                        cn, trace)
    try:
        res = tightness_sweep(cfg, bd, runs=runs, seed=seed, jobs=jobs, horizon=horizon)
    except SafetyViolation as v:
        click.echo(f"SAFETY VIOLATION: {v}", err=True)
        sys.exit(EXIT_UNSAFE)
    for f in sorted(res.max_delay):
        click.echo(f"flow {f:3d}: max delay {res.max_delay[f]:6d}  bound {float(res.bound[f]):12.6f}  "
                   f"tau {res.ratio[f]:.3f}")
    click.echo(f"{runs} runs, max tau {res.max_ratio:.3f}, avg tau {res.average_ratio:.3f}")
    if out:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["flow_id", "max_delay", "bound", "tau"])
            for f in sorted(res.max_delay):
                w.writerow([f, res.max_delay[f], fmt(res.bound[f]), f"{res.ratio[f]:.6f}"])


@main.command()
@config_opt
@click.option("--foi", type=int, required=True, help="Flow of interest id.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="DOT output path (stdout if omitted).")
def graph(config_path, foi, out):
    """DOT export of the indirect-blocking graph of one flow."""
    cfg = _load(config_path)
    if foi not in cfg.by_id:
        click.echo(f"error: no flow {foi}", err=True)
        sys.exit(EXIT_INVALID)
    dot = to_dot(construct_ib_graph(cfg.by_id[foi], cfg), f"flow_{foi}")
    if out:
        Path(out).write_text(dot, encoding="utf-8")
    else:
        click.echo(dot, nl=False)


@main.command(name="generate")
@click.option("--paradigm", type=click.Choice(["uniform", "quadrant"]), default="uniform",
              show_default=True)
@click.option("--flows", "n_flows", type=int, default=8, show_default=True)
@click.option("--width", type=int, default=4, show_default=True)
@click.option("--height", type=int, default=4, show_default=True)
@click.option("--length", nargs=2, type=int, default=(2, 8), show_default=True)
@click.option("--period", nargs=2, type=int, default=(100, 400), show_default=True)
@click.option("--burst", nargs=2, type=int, default=(1, 1), show_default=True)
@click.option("--jitter", nargs=2, type=int, default=(0, 0), show_default=True)
@click.option("--vcs", type=int, default=1, show_default=True)
@click.option("--buffer", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Config JSON to write.")
def generate_cmd(paradigm, n_flows, width, height, length, period, burst, jitter, vcs, buffer, seed, out):
    """Random config (uniform endpoints or quadrant families)."""
    try:
        spec = GeneratorSpec(paradigm, n_flows, width, height, tuple(length), tuple(period),
                             tuple(burst), tuple(jitter), vcs, buffer, seed)
        cfg = generate(spec)
    except (ValueError, GenerationExhausted) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INVALID)
    save_config(cfg, out)
    click.echo(f"wrote {len(cfg.flows)} flows to {out}")


if __name__ == "__main__":
    main()
