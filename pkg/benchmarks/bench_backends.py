"""Compare the numba and pure-numpy paths of the hot kernels.

    python3 benchmarks/bench_backends.py [--repeat N]

Each case is warmed up once (this also triggers numba compilation), then
timed as the best of N repeats. Outputs of the two paths are checked
against each other before timing.
"""
import argparse
import time

import numpy as np

from rbfgan import _backend
from rbfgan.datasets import burgers_oracle_solve, burgers_solution
from rbfgan.kernels import CLUSTER_KERNELS, rbf_activations, rbf_backward


def best_of(fn, repeat):
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases():
    rng = np.random.default_rng(0)
    x = rng.random((256, 4))
    centers = rng.random((128, 4))
    widths = 0.2 + rng.random((1, 128))
    dg = rng.standard_normal((256, 128))
    for kind in CLUSTER_KERNELS:
        yield f"rbf forward  {kind.value}", lambda k=kind: rbf_activations(k, x, centers, widths)

        def back(k=kind):
            g = rbf_activations(k, x, centers, widths)
            return rbf_backward(k, x, centers, widths, g, dg)
        yield f"rbf backward {kind.value}", back

    def solve():
        return burgers_oracle_solve((0.0, 6.0, 0.01), (0.2, 2.2), 0.5,
                                    lambda xx, tt: burgers_solution(xx, tt, 0.5), dt=0.005,
                                    output_times=[2.2])[2]
    yield "crank-nicolson 601 nodes x 400 steps", solve


def _flat(out):
    if isinstance(out, tuple):
        return np.concatenate([np.ravel(o) for o in out])
    return np.ravel(out)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'case':40s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, fn in cases():
        _backend.set_backend("numpy")
        ref = _flat(fn())
        t_np = best_of(fn, args.repeat)
        _backend.set_backend("numba")
        diff = np.max(np.abs(_flat(fn()) - ref))
        assert diff < 1e-9, f"{name}: backends disagree by {diff:.3g}"
        t_nb = best_of(fn, args.repeat)
        print(f"{name:40s} {t_np * 1e3:10.3f} {t_nb * 1e3:10.3f} {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
