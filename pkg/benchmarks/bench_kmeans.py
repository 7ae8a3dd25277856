"""Compare the compiled and interpreted clustering backends.

The clustering step is the only hot kernel in the simulator: it runs
once per slot over every node coordinate. Everything else is hashing
and queue bookkeeping, which the compiled backend cannot help with.

Usage:
    python3 benchmarks/bench_kmeans.py [--repeats N]

The first timed call after selecting the compiled backend excludes JIT
compilation: warmup() runs each kernel once beforehand.
"""

from __future__ import annotations

import argparse
import statistics
import time
from hashlib import sha256

from consensus_lens.overlay import embed_nodes, kmeans_cluster
from consensus_lens.overlay import kernels

SIZES = ((30, 5), (120, 11), (480, 22), (1920, 44))


def _instance(n: int) -> list:
    seed = sha256(b"bench-" + str(n).encode()).digest()
    return embed_nodes(seed, range(n))


def _time_one(points, k, seed, repeats: int) -> float:
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        kmeans_cluster(points, k, seed)
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=9,
                        help="timed repetitions per size (median reported)")
    args = parser.parse_args()

    backends = ["numpy"]
    if kernels.HAVE_NUMBA:
        backends.append("numba")
    else:
        print("note: compiled backend unavailable, timing numpy only")

    seed = sha256(b"bench-run-seed").digest()
    results: dict[str, dict[int, float]] = {b: {} for b in backends}
    for backend in backends:
        kernels.select_backend(backend)
        kernels.warmup()
        for n, k in SIZES:
            points = _instance(n)
            results[backend][n] = _time_one(points, k, seed, args.repeats)

    header = f"{'n':>6} {'k':>4}" + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for n, k in SIZES:
        row = f"{n:>6} {k:>4}"
        for backend in backends:
            row += f"{results[backend][n] * 1e3:>10.3f}ms"
        if len(backends) == 2:
            row += f"{results['numpy'][n] / results['numba'][n]:>9.1f}x"
        print(row)

    kernels.select_backend()  # restore the environment default


if __name__ == "__main__":
    main()
