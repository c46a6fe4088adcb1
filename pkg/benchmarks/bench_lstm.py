"""Benchmark the LSTM sequence kernel backends (pure numpy vs compiled).

Usage: python3 benchmarks/bench_lstm.py [--repeats N]
"""

import argparse
import time

import numpy as np

from muse.kernels import get_backend

CASES = [  # (T, d_in, hidden)
    (50, 8, 16),
    (200, 32, 32),
    (500, 32, 64),
    (1000, 80, 64),
]


def backends():
    out = {"python": get_backend("python")}
    try:
        out["cython"] = get_backend("cython")
    except ImportError:
        pass
    return out


def bench(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    impls = backends()
    if "cython" not in impls:
        print("note: compiled kernel not built; benchmarking python only")

    print(f"{'case':<18} {'pass':<9}"
          + "".join(f"{name:>12}" for name in impls)
          + ("  speedup" if len(impls) == 2 else ""))
    for t, d, h in CASES:
        rng = np.random.default_rng(0)
        x = rng.standard_normal((t, d))
        wx = rng.standard_normal((d, 4 * h)) * 0.2
        wh = rng.standard_normal((h, 4 * h)) * 0.2
        b = rng.standard_normal(4 * h) * 0.1
        dh = rng.standard_normal((t, h))

        fwd_times, bwd_times = {}, {}
        for name, (fwd, bwd) in impls.items():
            fwd_times[name] = bench(lambda: fwd(x, wx, wh, b), args.repeats)
            _, cache = fwd(x, wx, wh, b)
            bwd_times[name] = bench(lambda: bwd(dh, cache), args.repeats)

        for label, times in (("forward", fwd_times), ("backward", bwd_times)):
            row = f"T={t:<5} d={d:<3} h={h:<3} {label:<9}"
            row += "".join(f"{times[name] * 1e3:>10.2f}ms" for name in impls)
            if len(impls) == 2:
                row += f"  {times['python'] / times['cython']:>6.1f}x"
            print(row)


if __name__ == "__main__":
    main()
