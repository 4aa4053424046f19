"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run with `python benchmarks/bench_kernels.py`.  The same workloads are
timed under both backends; the jit path is warmed up first so compilation
does not pollute the numbers.
"""

import time

import numpy as np

from thinfilm import kernels


def _rand_field(rng, m):
    c = rng.standard_normal(2 * m + 1) + 1j * rng.standard_normal(2 * m + 1)
    return 0.5 * (c + np.conj(c[::-1]))


def make_workloads(rng):
    m = 512
    a = _rand_field(rng, m)
    b = _rand_field(rng, m)

    nmodes = 4097
    f = rng.standard_normal(nmodes) + 1j * rng.standard_normal(nmodes)
    th = rng.standard_normal(nmodes) + 1j * rng.standard_normal(nmodes)
    mats = [rng.standard_normal(nmodes) for _ in range(8)]
    nf = rng.standard_normal(nmodes) + 1j * rng.standard_normal(nmodes)
    nt = rng.standard_normal(nmodes) + 1j * rng.standard_normal(nmodes)

    n = 8192
    F = 0.3 * np.sin(np.linspace(0, 2 * np.pi, n, endpoint=False))
    T = 0.2 * np.cos(np.linspace(0, 2 * np.pi, n, endpoint=False))
    Fx, Tx, Fxxx, Fxx = np.gradient(F), np.gradient(T), np.gradient(F), -F
    r = F / 1.3
    s1 = np.ones(n)

    return {
        "conv_trunc": lambda k: k.conv_trunc(a, b, m),
        "cn_combine": lambda k: k.cn_combine(f, th, *mats, nf, nt, 1e-4),
        "taylor_sums": lambda k: k.taylor_sums(r, 256),
        "closed_fluxes": lambda k: k.closed_fluxes(
            F, T, Fx, Tx, Fxxx, 1.0, 1.0, 0.4, 1.3, 0.5),
        "series_terms_grid": lambda k: k.series_terms_grid(
            F, Fx, Fxx, T, Tx, s1, s1, s1, 0.4, 1.3, 0.5),
    }


def time_call(fn, k, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(k)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    loads = make_workloads(rng)
    backends = kernels.available_backends()
    print(f"available backends: {', '.join(backends)}")
    if "numba" in backends:
        kernels.select_backend("numba")
        for fn in loads.values():     # trigger jit compilation
            fn(kernels)
    print(f"{'kernel':<20}" + "".join(f"{b:>14}" for b in backends)
          + ("      speedup" if len(backends) > 1 else ""))
    for name, fn in loads.items():
        times = {}
        for b in backends:
            kernels.select_backend(b)
            times[b] = time_call(fn, kernels, repeats=7)
        row = f"{name:<20}" + "".join(f"{times[b] * 1e3:>12.3f}ms" for b in backends)
        if "numba" in times and "numpy" in times:
            row += f"{times['numpy'] / times['numba']:>11.2f}x"
        print(row)
    kernels.select_backend("numba" if "numba" in backends else "numpy")


if __name__ == "__main__":
    main()
