"""Nelder-Mead dip search from random starts.

Besides the canonical family there are many more zero configurations; this
collects some for a given N and checks each against the exact permanent.
"""

import argparse
import json

import numpy as np

from fshom.dipfinder import refine_dip, verify_dip
from fshom.geometry import PhaseConfig

ap = argparse.ArgumentParser()
ap.add_argument("--n", type=int, default=4)
ap.add_argument("--starts", type=int, default=20)
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

rng = np.random.default_rng(args.seed)
found = []
for _ in range(args.starts):
    start = PhaseConfig(tuple(rng.uniform(0, 2 * np.pi, args.n)))
    # first phase stays put; removes the trivial global offset direction
    cert = refine_dip(start, range(1, args.n))
    if cert.verified and verify_dip(cert.phases, "glynn").verified:
        found.append(cert.to_dict())

print(json.dumps({"n": args.n, "starts": args.starts, "dips": found}, indent=2))
print(f"# {len(found)}/{args.starts} starts converged to verified dips")
