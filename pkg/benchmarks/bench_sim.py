"""Time the numba cycle kernel against the plain Python one.

    python benchmarks/bench_sim.py [--runs N] [--flows N] [--size W]

Both kernels run the same schedules; their delays are checked for equality.
Setting WORMBOUND_NO_JIT=1 makes the library itself use the Python kernel.
"""
import argparse
import time

import numpy as np

from wormbound.generate import GeneratorSpec, generate
from wormbound.sim import TrafficSchedule, compile_config, kernel, simulate


def timed(cfg, cn, runs, loop):
    saved = kernel.cycle_loop
    kernel.cycle_loop = loop
    try:
        t0 = time.perf_counter()
        out = [simulate(cfg, TrafficSchedule(seed=7), compiled=cn, run=r) for r in range(runs)]
        return time.perf_counter() - t0, out
    finally:
        kernel.cycle_loop = saved


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--flows", type=int, default=16)
    ap.add_argument("--size", type=int, default=6)
    args = ap.parse_args()

    cfg = generate(GeneratorSpec("uniform", args.flows, args.size, args.size, vc_count=2, seed=3))
    cn = compile_config(cfg)
    if not kernel.JIT:
        print("WORMBOUND_NO_JIT is set; only the Python kernel is available")
        dt, _ = timed(cfg, cn, args.runs, kernel.cycle_loop_py)
        print(f"python  {dt:8.3f} s  ({dt / args.runs * 1e3:.1f} ms/run)")
        return

    timed(cfg, cn, 1, kernel.cycle_loop)  # compile outside the timing
    t_jit, a = timed(cfg, cn, args.runs, kernel.cycle_loop)
    t_py, b = timed(cfg, cn, args.runs, kernel.cycle_loop_py)
    same = all(np.array_equal(x.delays[f], y.delays[f]) for x, y in zip(a, b) for f in x.delays)
    cycles = sum(r.cycles for r in a)
    print(f"{args.flows} flows on {args.size}x{args.size}, {args.runs} runs, {cycles} cycles total")
    print(f"numba   {t_jit:8.3f} s  ({t_jit / args.runs * 1e3:.1f} ms/run)")
    print(f"python  {t_py:8.3f} s  ({t_py / args.runs * 1e3:.1f} ms/run)")
    print(f"speedup {t_py / t_jit:8.1f}x   identical delays: {same}")


if __name__ == "__main__":
    main()
