"""Wall-clock timing of the permanent algorithms."""

from __future__ import annotations

import time

import numpy as np

from .permanent import ALGORITHMS, LIMITS

CSV_HEADER = ("algorithm", "N", "wall_time_ns", "abs_value")


def time_permanent(algorithm: str, matrix: np.ndarray, repeats: int = 3, threads: int = 1):
    """Best-of-``repeats`` wall time in ns, plus ``|perm|``."""
    fn = ALGORITHMS[algorithm]
    kwargs = {} if algorithm == "naive" else {"threads": threads}
    best = None
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        value = fn(matrix, **kwargs).value
        dt = time.perf_counter_ns() - t0
        best = dt if best is None else min(best, dt)
    return best, abs(value)


def run_bench(n_min: int = 6, n_max: int = 10, algorithms=("naive", "ryser", "glynn"),
              repeats: int = 3, seed: int = 0, threads: int = 1):
    """Yield ``(algorithm, N, wall_time_ns, |value|)`` rows; each N uses one shared matrix."""
    rng = np.random.default_rng(seed)
    for n in range(n_min, n_max + 1):
        m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        for alg in algorithms:
            if n > LIMITS[alg]:
                continue
            ns, value = time_permanent(alg, m, repeats, threads)
            yield alg, n, ns, value
