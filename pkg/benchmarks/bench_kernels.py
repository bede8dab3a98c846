"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--windows 20000] [--repeat 5]

Each kernel is timed on both backends with identical inputs; the full-run row
routes the whole pipeline through one backend at a time.
"""

import argparse
import math
import time

import numpy as np

from xpbell import kernels
from xpbell.experiment import ExperimentConfig, run_experiment
from xpbell.rng import derive_keys

_FUNCS = ("mix64", "fill_uniform", "fill_normal", "window_verdicts", "gaussian_window_verdicts", "tally",
          "photogate_transit")


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def use_backend(mod):
    for name in _FUNCS:
        setattr(kernels, name, getattr(mod, name))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--windows", type=int, default=20_000)
    ap.add_argument("--width", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--trials", type=int, default=10_000, help="windows per pair for the full run")
    args = ap.parse_args()

    backends = kernels.available_backends()
    n, w = args.windows, args.width
    keys = derive_keys(12345, np.arange(n), 0)
    fkeys = derive_keys(12345, np.arange(n), 1)
    rng = np.random.default_rng(0)
    readings = rng.normal(size=(n, w))
    failed = rng.uniform(size=(n, w)) < 0.01
    x = rng.normal(size=n * w)
    p = rng.normal(size=n * w)
    xo = rng.choice(np.array([-1, 0, 1], dtype=np.int8), size=n * 10)
    po = rng.choice(np.array([-1, 0, 1], dtype=np.int8), size=n * 10)

    cases = {
        "fill_normal": lambda m: m.fill_normal(keys, 0, w),
        "window_verdicts": lambda m: m.window_verdicts(readings, failed, 1.0),
        "gaussian_window_verdicts": lambda m: m.gaussian_window_verdicts(keys, fkeys, w, 0.0, 1.0, 0.01, 1.0),
        "tally": lambda m: m.tally(xo, po),
        "photogate_transit": lambda m: m.photogate_transit(x, p, 0.01, 1.0, 1.0),
    }

    names = sorted(backends)
    print(f"{'kernel':<26}" + "".join(f"{b:>12}" for b in names) + f"{'speedup':>10}")
    for label, fn in cases.items():
        t = {b: best_of(lambda: fn(backends[b]), args.repeat) for b in names}
        ratio = t["python"] / t["cython"] if "cython" in t else math.nan
        print(f"{label:<26}" + "".join(f"{t[b]:>11.4f}s" for b in names) + f"{ratio:>9.2f}x")

    cfg = ExperimentConfig(trials=args.trials)
    saved = {name: getattr(kernels, name) for name in _FUNCS}
    t = {}
    try:
        for b in names:
            use_backend(backends[b])
            t[b] = best_of(lambda: run_experiment(cfg), max(1, args.repeat // 2))
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)
    ratio = t["python"] / t["cython"] if "cython" in t else math.nan
    print(f"{'run_experiment':<26}" + "".join(f"{t[b]:>11.4f}s" for b in names) + f"{ratio:>9.2f}x")
    readings_total = 8 * cfg.trials * cfg.window
    for b in names:
        print(f"  {b}: {readings_total / t[b]:.3g} readings/s (target {cfg.throughput_target:.3g})")


if __name__ == "__main__":
    main()
