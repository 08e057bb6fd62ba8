"""Compare the numba and pure-numpy kernel backends on typical problem sizes.

Run with ``python benchmarks/bench_kernels.py``.  The numba timings exclude
compilation (one warm-up call each).  Setting CHROMONET_DISABLE_NUMBA only
changes which backend the package uses by default; both are imported here.
"""

import argparse
import timeit

import numpy as np

from chromonet.geometry import sample_configuration
from chromonet.exciton import build_hamiltonian
from chromonet.kernels import numba_backend, numpy_backend
from chromonet.units import CM_TO_RAD_PS


def cases(n_paths, n_kernel):
    cfg = sample_configuration(n_paths, 30.0, rng_seed=11)
    absj = np.abs(build_hamiltonian(cfg).matrix)
    big = sample_configuration(200, 200.0, rng_seed=5)
    h = build_hamiltonian(sample_configuration(n_kernel, 30.0, rng_seed=3)).matrix * CM_TO_RAD_PS
    evals, evecs = np.linalg.eigh(h)
    evecs = evecs.astype(complex)
    amp = complex(2730.6, -329.6)
    rate = 50.0 * CM_TO_RAD_PS
    return {
        "coupling_matrix (200 sites)": lambda b: b.coupling_matrix(big.positions, big.dipoles, 134000.0),
        f"path_strengths (n={n_paths})": lambda b: b.path_strengths(absj, 0, n_paths - 1),
        f"count_paths_above (n={n_paths})": lambda b: b.count_paths_above(absj, 0, n_paths - 1, 10.0),
        f"memory_kernel_matrix (n={n_kernel})": lambda b: b.memory_kernel_matrix(evecs, evals, rate, amp),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths-n", type=int, default=10)
    ap.add_argument("--kernel-n", type=int, default=12)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    print(f"{'kernel':<34}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, fn in cases(args.paths_n, args.kernel_n).items():
        ref = fn(numpy_backend)
        got = fn(numba_backend)  # warm-up / compile
        assert np.allclose(ref, got, rtol=1e-12, atol=1e-12), name
        t_np = min(timeit.repeat(lambda: fn(numpy_backend), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: fn(numba_backend), number=1, repeat=args.repeat))
        print(f"{name:<34}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
