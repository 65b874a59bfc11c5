"""Coincidence correlation functions and output-state expansions."""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Norm, PhaseConfig, TransferMatrix, build_transfer_matrix, norm_factor
from .permanent import permanent, permanent_naive

EXPANSION_MAX_DIM = 6


@dataclass(frozen=True)
class CorrelationResult:
    g_value: float
    amplitude: complex
    n: int
    norm_convention: Norm = "unit"
    algorithm: str = "closed_form"

    def to_dict(self) -> dict:
        return {
            "g": self.g_value,
            "amplitude": [self.amplitude.real, self.amplitude.imag],
            "n": self.n,
            "norm": self.norm_convention,
            "algorithm": self.algorithm,
        }


@dataclass
class OutputDistribution:
    """Probability weight per occupancy pattern (tuple of photon counts per mode).

    ``total_weight`` is reported as computed; a non-unitary (restricted)
    transfer matrix gives less than one and is deliberately not renormalised.
    """

    weights: dict
    amplitudes: dict = field(default_factory=dict)

    @property
    def total_weight(self) -> float:
        return float(sum(self.weights.values()))

    def __getitem__(self, pattern) -> float:
        return self.weights.get(tuple(pattern), 0.0)

    def coincidence_amplitude(self) -> complex:
        n = len(next(iter(self.weights)))
        return self.amplitudes.get((1,) * n, 0j)

    def to_dict(self) -> dict:
        return {
            "weights": [
                {"pattern": list(p), "weight": w} for p, w in sorted(self.weights.items(), reverse=True)
            ],
            "total_weight": self.total_weight,
        }


def g2_closed_form(dp1: float, dp2: float) -> CorrelationResult:
    """Two-photon coincidence ``2 (1 + cos(dp1 - dp2))`` from its two paths."""
    amp = cmath.exp(-1j * (dp1 + 2 * dp2)) + cmath.exp(-1j * (dp2 + 2 * dp1))
    return CorrelationResult(2.0 * (1.0 + math.cos(dp1 - dp2)), amp, 2, "unit", "closed_form")


def gn_permanent(phases: PhaseConfig, norm: Norm = "unit", alg: str = "ryser",
                 threads: int = 1) -> CorrelationResult:
    if not isinstance(phases, PhaseConfig):
        phases = PhaseConfig(tuple(phases))
    tm = build_transfer_matrix(phases, norm)
    amp = permanent(tm.entries, alg, threads=threads).value
    return CorrelationResult(abs(amp) ** 2, amp, phases.n, norm, alg)


def real_amplitude(deltas, norm: Norm = "unit", alg: str = "ryser") -> float:
    """Coincidence amplitude rotated onto the real axis.

    Reversing the source order maps each permutation term onto the conjugate
    of another, which gives ``perm = exp(-i (N+1) sum(deltas)) * conj(perm)``.
    Multiplying by ``exp(i (N+1) sum(deltas) / 2)`` therefore yields a real
    number whose sign changes across the zero set of ``G``.
    """
    deltas = np.asarray(deltas, dtype=float)
    res = gn_permanent(PhaseConfig(tuple(deltas)), norm, alg)
    n = len(deltas)
    return (res.amplitude * cmath.exp(0.5j * (n + 1) * float(np.sum(deltas)))).real


BEAM_SPLITTER = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


def beam_splitter_output(input_state=(1, 1)) -> OutputDistribution:
    """Output of the symmetric 50:50 beam splitter for one photon per input port."""
    if tuple(input_state) != (1, 1):
        raise ValueError(f"only the |1,1> input is supported, got {tuple(input_state)!r}")
    return full_state_expansion(TransferMatrix(BEAM_SPLITTER, 1 / math.sqrt(2), "beam_splitter"))


def full_state_expansion(matrix) -> OutputDistribution:
    """Expand ``prod_n sum_m c[n, m] b_m^dag |0>`` term by term.

    Every one of the ``N^N`` assignments of sources to modes adds
    ``prod_n c[n, m(n)]`` to the raw amplitude of its occupancy pattern. A
    pattern with counts ``k`` is the state ``prod_j (b_j^dag)^k_j |0>``,
    whose norm squared is ``prod_j k_j!``, so its probability is
    ``|raw amplitude|^2 * prod_j k_j!``.
    """
    c = matrix.entries if isinstance(matrix, TransferMatrix) else np.asarray(matrix, dtype=complex)
    n = c.shape[0]
    if c.ndim != 2 or c.shape[1] != n:
        raise ValueError(f"expected a square matrix, got shape {c.shape}")
    if n > EXPANSION_MAX_DIM:
        from .permanent import DimensionError

        raise DimensionError(f"state expansion limited to dim <= {EXPANSION_MAX_DIM}, got {n}")

    assign = np.array(list(itertools.product(range(n), repeat=n)), dtype=np.int64)
    terms = np.prod(c[np.arange(n)[None, :], assign], axis=1)
    counts = np.zeros((len(assign), n), dtype=np.int64)
    np.add.at(counts, (np.repeat(np.arange(len(assign)), n), assign.ravel()), 1)
    # pattern -> row index via mixed radix (counts <= n)
    keys = counts @ (n + 1) ** np.arange(n)
    uniq, inverse = np.unique(keys, return_inverse=True)
    raw = np.zeros(len(uniq), dtype=complex)
    np.add.at(raw, inverse, terms)

    first = np.zeros(len(uniq), dtype=np.int64)
    first[inverse[::-1]] = np.arange(len(assign))[::-1]
    weights, amplitudes = {}, {}
    for u, row in enumerate(first):
        pattern = tuple(int(k) for k in counts[row])
        bose = math.prod(math.factorial(k) for k in pattern)
        amplitudes[pattern] = complex(raw[u])
        weights[pattern] = float(abs(raw[u]) ** 2 * bose)
    return OutputDistribution(weights, amplitudes)


@dataclass(frozen=True)
class AmplitudeCheck:
    passed: bool
    expansion_amplitude: complex
    permanent: complex
    discrepancy: float
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "expansion_amplitude": [self.expansion_amplitude.real, self.expansion_amplitude.imag],
            "permanent": [self.permanent.real, self.permanent.imag],
            "discrepancy": self.discrepancy,
            "tolerance": self.tolerance,
        }


def coincidence_amplitude_equals_permanent_check(matrix, rtol: float = 1e-10) -> AmplitudeCheck:
    """Compare the all-ones pattern of the literal expansion with ``perm(matrix)``."""
    c = matrix.entries if isinstance(matrix, TransferMatrix) else np.asarray(matrix, dtype=complex)
    dist = full_state_expansion(c)
    exp_amp = dist.coincidence_amplitude()
    perm = permanent_naive(c).value
    tol = rtol * max(1.0, abs(perm))
    gap = abs(exp_amp - perm)
    return AmplitudeCheck(gap <= tol, exp_amp, perm, gap, tol)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a complex Ginibre matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))[None, :]
