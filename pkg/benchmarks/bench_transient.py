"""Compiled vs pure-Python transient kernel on the limiter at +4 dBm.

    python3 benchmarks/bench_transient.py [--periods N] [--repeat R]
"""
import argparse
import time

import numpy as np

from pfsl import transient
from pfsl.oracle import pfsl


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--periods", type=int, default=50, help="drive periods to integrate")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    fx = pfsl(4.0)
    duration = args.periods / fx.f_in
    steps = round(duration * fx.f_in * transient.STEPS_PER_PERIOD)
    print(f"{fx.name}: {steps} steps, {len(fx.net.elements)} elements")
    if transient._integrate_ext is None:
        print("compiled kernel not built; run `pip install -e . --no-build-isolation` first")
        return
    t_c, w_c = timed(lambda: transient.transient_solve(fx.net, duration, kernel="cython"), args.repeat)
    t_p, w_p = timed(lambda: transient.transient_solve(fx.net, duration, kernel="python"), 1)
    diff = float(np.max(np.abs(w_c.samples - w_p.samples)))
    print(f"cython  {t_c * 1e3:9.1f} ms  ({steps / t_c:,.0f} steps/s)")
    print(f"python  {t_p * 1e3:9.1f} ms  ({steps / t_p:,.0f} steps/s)")
    print(f"speedup {t_p / t_c:9.1f}x   max |dV| between kernels {diff:.2e} V")


if __name__ == "__main__":
    main()
