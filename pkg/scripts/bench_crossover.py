"""Timing table for naive vs Ryser vs Glynn, plus a Ryser thread-scaling row."""

import argparse
import time

import numpy as np

from fshom.bench import run_bench
from fshom.permanent import permanent_ryser

ap = argparse.ArgumentParser()
ap.add_argument("--n-max", type=int, default=10)
ap.add_argument("--fast-n-max", type=int, default=22)
ap.add_argument("--threads", type=int, default=4)
args = ap.parse_args()

print("algorithm,N,wall_time_ns,abs_value")
for row in run_bench(6, args.n_max, repeats=3):
    print(",".join(map(str, row)))
for row in run_bench(args.n_max + 1, args.fast_n_max, ("ryser", "glynn"), repeats=1):
    print(",".join(map(str, row)))

m = np.random.default_rng(0).standard_normal((20, 20)) + 0j
for threads in (1, args.threads):
    t0 = time.perf_counter()
    v = permanent_ryser(m, threads=threads).value
    print(f"# ryser N=20 threads={threads}: {time.perf_counter() - t0:.3f}s value={v.real:.17g}")
