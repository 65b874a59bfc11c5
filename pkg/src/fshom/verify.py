"""Invariant suite behind ``fshom verify``.

Each check returns a :class:`Check` with the worst observed error; the suite
passes when every check does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .correlation import (
    coincidence_amplitude_equals_permanent_check,
    full_state_expansion,
    gn_permanent,
    random_unitary,
)
from .dipfinder import RESIDUAL_THRESHOLD, canonical_dip
from .geometry import PhaseConfig, build_transfer_matrix
from .permanent import FAST_MAX_DIM, permanent_glynn, permanent_naive, permanent_ryser


@dataclass
class Check:
    name: str
    threshold: float
    worst: float = 0.0
    cases: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def record(self, err: float, label: str):
        self.cases += 1
        if not err <= self.threshold:  # NaN fails too
            self.failures.append(label)
        if err > self.worst or math.isnan(err):
            self.worst = err

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "threshold": self.threshold,
            "worst": self.worst,
            "cases": self.cases,
            "failures": self.failures[:20],
        }


def random_complex(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def check_oracle(ryser, trials: int, seed: int, n_range=range(2, 9)) -> Check:
    chk = Check("oracle_equivalence", 1e-10)
    rng = np.random.default_rng(seed)
    for n in n_range:
        for t in range(trials):
            m = random_complex(n, rng)
            ref = permanent_naive(m).value
            scale = max(1.0, abs(ref))
            chk.record(abs(ryser(m).value - ref) / scale, f"ryser n={n} trial={t}")
            chk.record(abs(permanent_glynn(m).value - ref) / scale, f"glynn n={n} trial={t}")
    return chk


def check_canonical(ryser, n_max: int) -> Check:
    chk = Check("canonical_dip", RESIDUAL_THRESHOLD)
    for n in range(2, n_max + 1):
        m = build_transfer_matrix(canonical_dip(n)).entries
        for name, fn in (("ryser", ryser), ("glynn", permanent_glynn)):
            chk.record(abs(fn(m).value) / math.factorial(n), f"{name} n={n}")
    return chk


def random_phases(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform phases in [0, 2pi) on a 2**-40 grid.

    On this grid ``d + 2*np.pi`` is exact in float64 (``np.pi`` is a multiple
    of 2**-48), so a shifted config really is the same point shifted by the
    float period rather than a neighbouring point ~1e-15 rad away.
    """
    return np.round(rng.uniform(0.0, 2 * np.pi, n) * 2.0**40) / 2.0**40 % (2 * np.pi)


def _g(deltas, ryser):
    m = build_transfer_matrix(PhaseConfig(tuple(deltas))).entries
    return abs(ryser(m).value) ** 2


def check_symmetries(ryser, trials: int, seed: int, n_max: int = 10) -> list:
    perm_chk = Check("column_permutation", 1e-12)
    shift_chk = Check("two_pi_shift", 1e-12)
    neg_chk = Check("phase_negation", 1e-12)
    rng = np.random.default_rng(seed)
    for n in range(2, min(n_max, 10) + 1):
        for t in range(trials):
            d = random_phases(n, rng)
            g0 = _g(d, ryser)
            scale = max(1.0, g0)
            label = f"n={n} trial={t}"
            perm_chk.record(abs(_g(rng.permutation(d), ryser) - g0) / scale, label)
            shifted = d.copy()
            shifted[rng.integers(n)] += 2 * np.pi
            shift_chk.record(abs(_g(shifted, ryser) - g0) / scale, label)
            neg_chk.record(abs(_g(-d, ryser) - g0) / scale, label)
    return [perm_chk, shift_chk, neg_chk]


def check_unitarity(trials: int, seed: int) -> Check:
    chk = Check("probability_conservation", 1e-10)
    rng = np.random.default_rng(seed)
    for n in (2, 3, 4):
        for t in range(trials):
            total = full_state_expansion(random_unitary(n, rng)).total_weight
            chk.record(abs(total - 1.0), f"n={n} trial={t}")
    return chk


def check_expansion(trials: int, seed: int) -> Check:
    chk = Check("expansion_vs_permanent", 1e-10)
    rng = np.random.default_rng(seed)
    for n in range(2, 6):
        for t in range(trials):
            m = build_transfer_matrix(PhaseConfig(tuple(rng.uniform(0, 2 * np.pi, n)))).entries
            rep = coincidence_amplitude_equals_permanent_check(m)
            chk.record(rep.discrepancy / max(1.0, abs(rep.permanent)), f"n={n} trial={t}")
    return chk


def run_suite(n_max: int = 14, seed: int = 0, trials: int = 100, inject_fault: bool = False) -> dict:
    """Run every check; ``inject_fault`` negates one Ryser term to prove failures surface."""
    if not 2 <= n_max <= FAST_MAX_DIM:
        raise ValueError(f"n_max must lie in [2, {FAST_MAX_DIM}], got {n_max}")
    ryser = partial(permanent_ryser, _flip_term=1) if inject_fault else permanent_ryser
    checks = [
        check_oracle(ryser, trials, seed),
        check_canonical(ryser, n_max),
        *check_symmetries(ryser, trials, seed + 1, n_max),
        check_unitarity(max(1, trials // 5), seed + 2),
        check_expansion(max(1, trials // 2), seed + 3),
    ]
    return {
        "passed": all(c.passed for c in checks),
        "n_max": n_max,
        "seed": seed,
        "checks": {c.name: c.to_dict() for c in checks},
    }
