"""Benchmark: compiled Cython kernels vs the NumPy fallback.

Times the hot operations (mixture tail sums, the final-threshold solve,
stage-two quadrature, a full planning cell, and a small sweep) under both
backends and prints a comparison table.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import importlib
import math
import time

import numpy as np


def _load_backends():
    import mixtrial._core_py as py

    backends = {"python": py}
    try:
        import mixtrial._core_cy as cy

        backends["cython"] = cy
    except ImportError:
        pass
    return backends


def _bench(fn, repeat: int) -> float:
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_cases(core):
    etas = np.linspace(-0.3, 0.6, 61)
    eta0 = 0.0741614317
    eta1s = np.full(9, 0.2771807649)
    alpha1s = np.linspace(0.005, 0.045, 9)
    n2s = np.full(9, 65.0)
    x1 = np.random.default_rng(0).uniform(0.08, 0.27, 10_000)
    x2 = np.random.default_rng(1).normal(0.0, 0.2, 10_000)

    def beta_mix():
        core.beta_mix(100, etas, 2.0, 0.2)

    def solve_eta2():
        core.solve_eta2(100, eta0, eta1s, alpha1s, n2s, 0.05)

    def beta2_exact():
        core.beta2_point(100, eta0, 0.2771807649, 65, 0.1925136, 2.0, 0.2, True)

    def pvalue_batch():
        core.pvalue2(100, eta0, 0.2771807649, 65, 0.026, x1, x2)

    return {
        "beta_mix (n=100, 61 thresholds)": (beta_mix, 200),
        "solve_eta2 (batch of 9)": (solve_eta2, 50),
        "beta2 exact (one point)": (beta2_exact, 200),
        "pvalue2 (batch of 10k)": (pvalue_batch, 5),
    }


def planning_cases(backend_name: str):
    """High-level timings routed through the selected backend."""
    import os
    import subprocess
    import sys

    code = (
        "import time, mixtrial as mt\n"
        "region = mt.StrongEffectRegion.from_vectors([2,1,0.7],[0.2,0.4,0.6])\n"
        "t0 = time.perf_counter()\n"
        "mt.plan_two_stage(region, 0.05, 0.2, 55, 0.7)\n"
        "t1 = time.perf_counter() - t0\n"
        "t0 = time.perf_counter()\n"
        "mt.sweep(region, 0.05, 0.2, range(40, 61), [0.7, 0.725, 0.75])\n"
        "t2 = time.perf_counter() - t0\n"
        "print(f'{t1:.6f} {t2:.6f}')\n"
    )
    env = dict(os.environ, MIXTRIAL_KERNELS=backend_name)
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    plan_t, sweep_t = (float(x) for x in out.stdout.split())
    return plan_t, sweep_t


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = _load_backends()
    print(f"backends available: {', '.join(backends)}\n")

    case_names = list(kernel_cases(list(backends.values())[0]).keys())
    results = {b: {} for b in backends}
    for bname, core in backends.items():
        for case_name, (fn, inner) in kernel_cases(core).items():
            t = _bench(lambda: [fn() for _ in range(inner)], args.repeat) / inner
            results[bname][case_name] = t

    width = max(len(c) for c in case_names) + 2
    header = f"{'kernel':<{width}}" + "".join(f"{b:>14}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for case_name in case_names:
        line = f"{case_name:<{width}}"
        for bname in backends:
            line += f"{results[bname][case_name] * 1e6:>12.1f}us"
        if len(backends) == 2:
            ratio = results["python"][case_name] / results["cython"][case_name]
            line += f"{ratio:>9.1f}x"
        print(line)

    print("\nend-to-end (fresh interpreter per backend):")
    for bname in backends:
        plan_t, sweep_t = planning_cases("py" if bname == "python" else "cy")
        print(f"  {bname:<8} plan_two_stage {plan_t * 1e3:7.1f} ms   "
              f"63-cell sweep {sweep_t:6.2f} s")


if __name__ == "__main__":
    main()
