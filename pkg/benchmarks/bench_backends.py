"""Time the numba and pure-numpy RK4 kernels on the 6/6/18 ns Rb run.

    python benchmarks/bench_backends.py [--repeat 3] [--divisor 2000]
"""
import argparse
import time

import numpy as np

from ladder_inversion import _kernels
from ladder_inversion.dynamics import propagate
from ladder_inversion.model import ground_state, rb_default
from ladder_inversion.protocol import build_inversion_schedule


def run(kernel, divisor, repeat):
    _kernels.rk4_segment = kernel
    sys = rb_default()
    sched = build_inversion_schedule(sys, [6.0, 6.0, 18.0])
    step = 6.0 / divisor
    propagate(ground_state(4), sched, sys, step=step)  # JIT warm-up
    best, final = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        final = propagate(ground_state(4), sched, sys, step=step).final_state
        best = min(best, time.perf_counter() - t0)
    return best, final


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--divisor", type=float, default=2000)
    args = parser.parse_args()

    steps = int(round(30.0 / (6.0 / args.divisor)))
    print(f"Rb 6/6/18 ns, {steps} RK4 steps, best of {args.repeat}")
    results = {}
    backends = [("numpy", _kernels.rk4_segment_numpy)]
    if _kernels.rk4_segment_numba is not None:
        backends.insert(0, ("numba", _kernels.rk4_segment_numba))
    for name, kernel in backends:
        results[name] = run(kernel, args.divisor, args.repeat)
        print(f"{name:>6}: {results[name][0] * 1e3:9.2f} ms")
    if len(results) == 2:
        (tn, fn), (tp, fp) = results["numba"], results["numpy"]
        print(f"speedup {tp / tn:.1f}x, max |diff| {np.max(np.abs(fn - fp)):.1e}")


if __name__ == "__main__":
    main()
