"""Benchmark the compiled kernels against the pure-Python fallback.

Run with ``python benchmarks/bench_kernels.py``. Workloads mirror the hot
paths: batched chain products plus full pair tables at small dimension,
and a search-shaped loop of many tiny batches.
"""

from __future__ import annotations

import time

import numpy as np

from chkit import kernels


def _stack(rng, n_hist, n_slots, dim):
    ev = rng.normal(size=(n_hist, n_slots, dim, dim)) \
        + 1j * rng.normal(size=(n_hist, n_slots, dim, dim))
    return np.ascontiguousarray(ev.astype(np.complex128))


def time_call(fn, repeat: int = 5) -> float:
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_table(mod, ev, rho, loops: int) -> float:
    def run():
        for _ in range(loops):
            chains = mod.chain_products(ev)
            mod.decoherence_table(chains, rho)
    return time_call(run)


def bench_search_shape(mod, batches, rho, loops: int) -> float:
    def run():
        for _ in range(loops):
            for ev in batches:
                chains = mod.chain_products(ev)
                mod.history_weights(chains, rho)
    return time_call(run)


def main() -> None:
    rng = np.random.default_rng(0)
    backends = kernels.available_backends()
    print(f"active backend: {kernels.BACKEND}")
    print(f"benchmarked backends: {', '.join(sorted(backends))}\n")
    header = f"{'workload':<38}" + "".join(f"{name:>12}" for name in sorted(backends))
    print(header + ("     speedup" if len(backends) > 1 else ""))
    print("-" * len(header))

    cases = [
        ("pair table, dim 3, 8 histories x500", 3, 8, 3, 500),
        ("pair table, dim 3, 64 histories x100", 3, 64, 3, 100),
        ("pair table, dim 6, 216 histories x10", 6, 216, 3, 10),
    ]
    for label, dim, n_hist, n_slots, loops in cases:
        ev = _stack(rng, n_hist, n_slots, dim)
        rho = np.eye(dim, dtype=np.complex128) / dim
        times = {name: bench_table(mod, ev, rho, loops)
                 for name, mod in backends.items()}
        row = f"{label:<38}" + "".join(
            f"{times[name] * 1e3:>10.2f}ms" for name in sorted(backends))
        if len(times) > 1:
            row += f"{times['python'] / times['compiled']:>11.1f}x"
        print(row)

    # search-shaped workload: many independent small batches
    batches = [_stack(rng, 16, 3, 3) for _ in range(200)]
    rho3 = np.eye(3, dtype=np.complex128) / 3
    times = {name: bench_search_shape(mod, batches, rho3, 5)
             for name, mod in backends.items()}
    label = "search shape, 200 batches of 16 x5"
    row = f"{label:<38}" + "".join(
        f"{times[name] * 1e3:>10.2f}ms" for name in sorted(backends))
    if len(times) > 1:
        row += f"{times['python'] / times['compiled']:>11.1f}x"
    print(row)


if __name__ == "__main__":
    main()
