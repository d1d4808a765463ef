"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--points N] [--steps N] [--repeat N]

Each kernel is checked for agreement before timing; the first numba call
(compilation or cache load) is reported separately.
"""
import argparse
import time

import numpy as np

from torflux import kernels
from torflux.trigcalc import PoissonTensor, TrigPoly, canonical_symplectic, hamiltonian_field
from torflux.trigcalc.trigpoly import sparse_terms


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=16384)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--bandwidth", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    pi = PoissonTensor.constant(np.linalg.inv(canonical_symplectic(2)))
    f = TrigPoly.random(2, args.bandwidth, rng, scale=0.05, zero_mean=True)
    kv, cf = sparse_terms(hamiltonian_field(pi, f).comps)
    pts = rng.random((args.points, 2))
    dt = 1.0 / args.steps

    cases = {
        "trig_eval": (np.ascontiguousarray(pts), kv, cf),
        "rk4_autonomous": (np.ascontiguousarray(pts), kv, cf, dt, args.steps),
    }
    print(f"points={args.points} steps={args.steps} terms={kv.shape[0]}")
    print(f"{'kernel':<16}{'numpy [s]':>12}{'numba [s]':>12}{'first call':>12}{'speedup':>10}{'max diff':>12}")
    for name, call_args in cases.items():
        jit = kernels.IMPLEMENTATIONS["numba"][name]
        ref = kernels.IMPLEMENTATIONS["numpy"][name]
        t0 = time.perf_counter()
        jit(*call_args)
        first = time.perf_counter() - t0
        t_np, out_np = best_of(lambda: ref(*call_args), args.repeat)
        t_nb, out_nb = best_of(lambda: jit(*call_args), args.repeat)
        diff = float(np.max(np.abs(out_np - out_nb)))
        print(f"{name:<16}{t_np:>12.4f}{t_nb:>12.4f}{first:>12.4f}{t_np / t_nb:>10.2f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
