"""Exact matrix permanents.

Three routes with different cost and trust:

* :func:`permanent_naive` enumerates all ``N!`` permutations; the oracle.
* :func:`permanent_ryser` uses the inclusion-exclusion formula over column
  subsets, ``2^N`` terms.
* :func:`permanent_glynn` uses the +-1 sign-vector formula, ``2^(N-1)`` terms.

Both fast routes walk their subset space in binary-reflected Gray-code order
so that each step flips one bit and costs ``O(N)``. The index space is cut
into ``2^s`` contiguous segments of length ``2^b``. Inside a segment the
flipped bit at step ``t`` is ``ctz(t)`` for every segment, so all segments
advance in lockstep as numpy rows; each segment's start state is computed
directly from its Gray code. Segment layout depends only on ``N``, which
keeps results bitwise stable for any thread count.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

NAIVE_MAX_DIM = 10
FAST_MAX_DIM = 30

_STEP_BITS = 8  # steps per segment = 2**_STEP_BITS (when enough bits exist)
_MAX_SEGMENT_BITS = 14
_NAIVE_CHUNK = 1 << 16


#: Working dtypes for the Gray-code sums. Terms can exceed the permanent by
#: many orders of magnitude, so the default accumulates in x87 extended
#: precision where numpy provides it (it silently equals double elsewhere).
PRECISIONS = {"double": np.complex128, "extended": np.clongdouble}


class DimensionError(ValueError):
    """Matrix is too large (or malformed) for the requested algorithm."""


@dataclass(frozen=True)
class PermanentResult:
    value: complex
    algorithm: str
    dim: int

    def __abs__(self):
        return abs(self.value)


def _as_square(matrix, limit: int, name: str) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"permanent needs a square matrix, got shape {m.shape}")
    if m.shape[0] < 1:
        raise DimensionError("permanent needs dim >= 1")
    if m.shape[0] > limit:
        raise DimensionError(f"{name} permanent limited to dim <= {limit}, got {m.shape[0]}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


@lru_cache(maxsize=None)
def _permutation_table(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.int8)


def permanent_naive(matrix) -> PermanentResult:
    """Sum over every permutation ``sigma`` of ``prod_m M[sigma(m), m]``."""
    m = _as_square(matrix, NAIVE_MAX_DIM, "naive")
    n = m.shape[0]
    perms = _permutation_table(n)
    cols = np.arange(n)
    total = 0j
    for start in range(0, len(perms), _NAIVE_CHUNK):
        block = perms[start:start + _NAIVE_CHUNK]
        total += np.prod(m[block, cols], axis=1).sum()
    return PermanentResult(complex(total), "naive", n)


def _layout(bits: int) -> tuple[int, int]:
    """(segment_bits, step_bits) for a Gray walk over ``2**bits`` states."""
    step_bits = min(bits, _STEP_BITS)
    seg_bits = bits - step_bits
    if seg_bits > _MAX_SEGMENT_BITS:
        step_bits += seg_bits - _MAX_SEGMENT_BITS
        seg_bits = _MAX_SEGMENT_BITS
    return seg_bits, step_bits


def _bit_matrix(codes: np.ndarray, bits: int) -> np.ndarray:
    return ((codes[:, None] >> np.arange(bits)[None, :]) & 1).astype(float)


def _parity(codes: np.ndarray) -> np.ndarray:
    p = np.zeros_like(codes)
    c = codes.copy()
    while np.any(c):
        p ^= c & 1
        c >>= 1
    return p


def _ryser_segments(m, first, count, step_bits, flip_index):
    """Signed partial Ryser sums for segments ``first .. first+count-1``."""
    n = m.shape[0]
    length = 1 << step_bits
    seg = np.arange(first, first + count, dtype=np.int64)
    idx = seg * length
    gray = idx ^ (idx >> 1)
    # row sums over the chosen column subset, one row of `sums` per segment
    sums = _bit_matrix(gray, n) @ m.T
    sign = 1.0 - 2.0 * _parity(gray)
    acc = np.zeros(count, dtype=m.dtype)
    for t in range(length):
        if t:
            j = (t & -t).bit_length() - 1
            cur = idx + t
            added = ((cur ^ (cur >> 1)) >> j) & 1
            sums += (2.0 * added - 1.0)[:, None] * m[:, j][None, :]
            sign = -sign
        term = sign * np.prod(sums, axis=1)
        if flip_index is not None:
            hit = (idx + t) == flip_index
            term = np.where(hit, -term, term)
        acc += term
    return acc


def _glynn_segments(m, first, count, step_bits, flip_index):
    """Signed partial Glynn sums; bit ``i`` set means row ``i+1`` has sign -1."""
    n = m.shape[0]
    length = 1 << step_bits
    seg = np.arange(first, first + count, dtype=np.int64)
    idx = seg * length
    gray = idx ^ (idx >> 1)
    signs = 1.0 - 2.0 * _bit_matrix(gray, n - 1)
    sums = m[0][None, :] + signs @ m[1:]
    sign = 1.0 - 2.0 * _parity(gray)
    acc = np.zeros(count, dtype=m.dtype)
    for t in range(length):
        if t:
            j = (t & -t).bit_length() - 1
            cur = idx + t
            negated = ((cur ^ (cur >> 1)) >> j) & 1
            sums += (2.0 - 4.0 * negated)[:, None] * m[j + 1][None, :]
            sign = -sign
        term = sign * np.prod(sums, axis=1)
        if flip_index is not None:
            term = np.where((idx + t) == flip_index, -term, term)
        acc += term
    return acc


def _gray_walk(kernel, m, bits, threads, precision="extended", flip_index=None) -> complex:
    try:
        m = m.astype(PRECISIONS[precision])
    except KeyError:
        raise ValueError(f"precision must be one of {sorted(PRECISIONS)}, got {precision!r}") from None
    seg_bits, step_bits = _layout(bits)
    n_seg = 1 << seg_bits
    threads = max(1, min(int(threads), n_seg))
    if threads == 1:
        partial = kernel(m, 0, n_seg, step_bits, flip_index)
    else:
        bounds = np.linspace(0, n_seg, threads + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = pool.map(
                lambda ab: kernel(m, ab[0], ab[1] - ab[0], step_bits, flip_index),
                zip(bounds[:-1], bounds[1:]),
            )
            partial = np.concatenate(list(parts))
    # fixed-shape reduction: same bits regardless of how segments were scheduled
    return complex(np.sum(partial))


def permanent_ryser(matrix, threads: int = 1, precision: str = "extended", *,
                    _flip_term: int | None = None) -> PermanentResult:
    """Ryser's formula,

    ``perm(M) = (-1)^N sum_{S subset cols} (-1)^|S| prod_n sum_{m in S} M[n, m]``.

    ``_flip_term`` negates the term with that Gray index; it exists only to
    let the verification harness prove that it notices a broken kernel.
    """
    m = _as_square(matrix, FAST_MAX_DIM, "ryser")
    n = m.shape[0]
    total = _gray_walk(_ryser_segments, m, n, threads, precision, _flip_term)
    return PermanentResult((-1) ** n * total, "ryser", n)


def permanent_glynn(matrix, threads: int = 1, precision: str = "extended") -> PermanentResult:
    """Glynn's formula with the first row's sign pinned to +1.

    ``perm(M) = 2^-(N-1) sum_delta (prod_k delta_k) prod_j sum_i delta_i M[i, j]``
    """
    m = _as_square(matrix, FAST_MAX_DIM, "glynn")
    n = m.shape[0]
    if n == 1:
        return PermanentResult(complex(m[0, 0]), "glynn", 1)
    total = _gray_walk(_glynn_segments, m, n - 1, threads, precision)
    return PermanentResult(total / 2 ** (n - 1), "glynn", n)


def _as_stack(matrices, limit: int, name: str) -> np.ndarray:
    m = np.asarray(matrices, dtype=complex)
    if m.ndim != 3 or m.shape[1] != m.shape[2] or m.shape[1] < 1:
        raise DimensionError(f"expected a stack of square matrices, got shape {m.shape}")
    if m.shape[1] > limit:
        raise DimensionError(f"{name} permanent limited to dim <= {limit}, got {m.shape[1]}")
    return m


def permanent_batch(matrices, algorithm: str = "ryser") -> np.ndarray:
    """Permanents of a stack of ``(B, N, N)`` matrices, vectorised over ``B``.

    Same Gray-code recurrences as the single-matrix routines, with the batch
    axis playing the role of the segment axis. Meant for dense grid scans at
    small ``N``.
    """
    if algorithm == "naive":
        m = _as_stack(matrices, NAIVE_MAX_DIM, "naive")
        n = m.shape[1]
        perms = _permutation_table(n)
        cols = np.arange(n)
        out = np.zeros(m.shape[0], dtype=complex)
        for start in range(0, len(perms), _NAIVE_CHUNK // n):
            block = perms[start:start + _NAIVE_CHUNK // n]
            out += np.prod(m[:, block, cols], axis=2).sum(axis=1)
        return out
    m = _as_stack(matrices, FAST_MAX_DIM, algorithm)
    n = m.shape[1]
    if algorithm == "ryser":
        sums = np.zeros((m.shape[0], n), dtype=complex)
        acc = np.zeros(m.shape[0], dtype=complex)
        sign = 1.0
        gray = 0
        for t in range(1, 1 << n):
            j = (t & -t).bit_length() - 1
            gray ^= 1 << j
            if gray >> j & 1:
                sums += m[:, :, j]
            else:
                sums -= m[:, :, j]
            sign = -sign
            acc += sign * np.prod(sums, axis=1)
        return (-1) ** n * acc
    if algorithm == "glynn":
        if n == 1:
            return m[:, 0, 0].copy()
        sums = m.sum(axis=1)
        acc = np.prod(sums, axis=1)
        sign = 1.0
        gray = 0
        for t in range(1, 1 << (n - 1)):
            j = (t & -t).bit_length() - 1
            gray ^= 1 << j
            if gray >> j & 1:
                sums -= 2.0 * m[:, j + 1, :]
            else:
                sums += 2.0 * m[:, j + 1, :]
            sign = -sign
            acc += sign * np.prod(sums, axis=1)
        return acc / 2 ** (n - 1)
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}")


ALGORITHMS = {
    "naive": permanent_naive,
    "ryser": permanent_ryser,
    "glynn": permanent_glynn,
}

LIMITS = {"naive": NAIVE_MAX_DIM, "ryser": FAST_MAX_DIM, "glynn": FAST_MAX_DIM}


def permanent(matrix, algorithm: str = "ryser", threads: int = 1,
              precision: str = "extended") -> PermanentResult:
    try:
        fn = ALGORITHMS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}") from None
    if algorithm == "naive":
        return fn(matrix)
    return fn(matrix, threads=threads, precision=precision)


def factorial(n: int) -> int:
    return math.factorial(n)
