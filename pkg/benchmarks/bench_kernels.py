"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--symbols N] [--repeat R]

Times the fused combine+detect kernel and a full ``run_point`` cell for each
backend and checks that both produce identical detections.
"""

import argparse
import time
from dataclasses import replace

import numpy as np

from riclink import kernels, montecarlo
from riclink.channel import RicianParams
from riclink.modem import build
from riclink.montecarlo import SimPoint, StoppingRule


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--symbols", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = kernels.available_backends()
    if kernels.compiled_backend is None:
        print("compiled extension not available; timing the numpy backend only")

    rng = np.random.default_rng(0)
    print(f"{'case':<28}" + "".join(f"{b.BACKEND:>12}" for b in backends) + f"{'speedup':>10}")
    for scheme, m, branches in [("psk", 16, 1), ("psk", 64, 5), ("qam", 256, 4), ("qam", 1024, 5)]:
        c = build(scheme, m)
        n = args.symbols
        h = (rng.standard_normal((n, branches)) + 1j * rng.standard_normal((n, branches))) / np.sqrt(2)
        r = h * c.symbols[rng.integers(0, m, n)][:, None] + 0.1 * rng.standard_normal((n, branches))
        results = [b.mrc_detect(h, r, c.symbols) for b in backends]
        assert all(np.array_equal(results[0], x) for x in results[1:]), "backends disagree"
        times = [best_of(lambda b=b: b.mrc_detect(h, r, c.symbols), args.repeat) for b in backends]
        speed = f"{times[-1] / times[0]:>9.1f}x" if len(times) > 1 else ""
        label = f"mrc_detect {c.name} L={branches}"
        print(f"{label:<28}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times) + speed)

    # end-to-end cell, swapping the kernel module used by the engine
    point = SimPoint("qam", 1024, 2.0, 5, RicianParams(5.0), StoppingRule(10**9, 2 * 10**6, 500_000), seed=1)
    times, results = [], []
    for b in backends:
        montecarlo.kernels = b
        t0 = time.perf_counter()
        results.append(montecarlo.run_point(replace(point)))
        times.append(time.perf_counter() - t0)
    montecarlo.kernels = kernels
    assert all(x == results[0] for x in results[1:]), "backends disagree"
    speed = f"{times[-1] / times[0]:>9.1f}x" if len(times) > 1 else ""
    print(f"{'run_point 1024-QAM L=5 2Mb':<28}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times) + speed)


if __name__ == "__main__":
    main()
