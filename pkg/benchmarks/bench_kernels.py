#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure NumPy/SciPy fallback.

Runs the three hot kernels (CSR products, general-p prox, ray tracing) on
desk-scale inputs under both backends and reports per-call times, then an
end-to-end sparse reconstruction under the active backend.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from tiksolve import _kernels
from tiksolve._kernels import pykernels


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backends(repeats):
    backends = [("python", pykernels)]
    if _kernels.HAVE_COMPILED:
        from tiksolve._kernels import _core

        backends.append(("compiled", _core))
    else:
        print("compiled backend not built; showing the fallback only\n")

    from tiksolve.tomo import build_radon

    n1 = n2 = 96
    num_angles, num_offsets = 90, 145
    A = build_radon(n1, n2, num_angles, num_offsets)
    x = np.random.default_rng(0).normal(size=A.shape[1])
    y = np.random.default_rng(1).normal(size=A.shape[0])
    vhat = np.random.default_rng(2).normal(scale=3.0, size=200_000)
    c = np.full(vhat.size, 0.05)
    angles = np.arange(num_angles) * (np.pi / num_angles)
    offsets = np.linspace(-1.0, 1.0, num_offsets)

    rows = []
    for name, mod in backends:
        handle = mod.make_csr_handle(A.indptr, A.indices, A.data, A.shape)
        rows.append(
            (
                name,
                timeit(lambda: mod.csr_matvec(handle, x), repeats),
                timeit(lambda: mod.csr_rmatvec(handle, y), repeats),
                timeit(lambda: mod.prox_power_newton(vhat, c, 0.7), repeats),
                timeit(lambda: mod.radon_entries(n1, n2, angles, offsets), max(1, repeats // 2)),
            )
        )

    print(f"kernel timings (best of {repeats}; CSR {A.shape} with {A.nnz} nonzeros)")
    header = f"{'backend':>9} | {'matvec':>10} | {'rmatvec':>10} | {'prox p=0.7':>10} | {'ray trace':>10}"
    print(header)
    print("-" * len(header))
    for name, t_mv, t_rmv, t_prox, t_radon in rows:
        print(
            f"{name:>9} | {t_mv * 1e3:8.3f} ms | {t_rmv * 1e3:8.3f} ms | "
            f"{t_prox * 1e3:8.3f} ms | {t_radon * 1e3:8.3f} ms"
        )
    if len(rows) == 2:
        print("\nspeedup (python / compiled):")
        for j, label in ((1, "matvec"), (2, "rmatvec"), (3, "prox"), (4, "ray trace")):
            print(f"  {label:>9}: {rows[0][j] / rows[1][j]:6.2f}x")


def bench_solve():
    from tiksolve.envelope import CompositeProblem, QuadraticFidelity
    from tiksolve.newton import solve
    from tiksolve.penalties import LpPenalty
    from tiksolve.tomo import add_noise, build_radon, shepp_phantom
    from tiksolve.wavelets import HaarSynthesisOperator
    from tiksolve.operators import Composition

    n = 64
    A = build_radon(n, n, 60, 95)
    img = shepp_phantom(n, n)
    y = add_noise(A.apply(img.values), 0.01, seed=7)
    synth = HaarSynthesisOperator(n, n, 4)
    prob = CompositeProblem(
        QuadraticFidelity(Composition(A, synth), y), LpPenalty(1.0, np.ones(n * n), 1e-3)
    )
    t0 = time.perf_counter()
    rep = solve(prob, np.zeros(n * n))
    dt = time.perf_counter() - t0
    print(
        f"\nend-to-end 64x64 wavelet reconstruction [{_kernels.BACKEND} backend]: "
        f"{rep.iterations} iterations, residual {rep.residual_rel:.2e}, {dt:.2f} s"
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()
    print(f"active backend: {_kernels.BACKEND} (thread cap {_kernels.thread_cap()})\n")
    bench_backends(args.repeats)
    bench_solve()


if __name__ == "__main__":
    main()
