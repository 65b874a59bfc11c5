import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fshom.dipfinder import canonical_dip
from fshom.geometry import build_transfer_matrix
from fshom.permanent import (
    DimensionError,
    permanent,
    permanent_batch,
    permanent_glynn,
    permanent_naive,
    permanent_ryser,
)

FAST = [permanent_ryser, permanent_glynn]


def rand_c(rng, n):
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def laplace_oracle(m):
    """Expansion along the first column; independent of every implementation here."""
    n = len(m)
    if n == 1:
        return m[0][0]
    return sum(m[i][0] * laplace_oracle([row[1:] for k, row in enumerate(m) if k != i]) for i in range(n))


# --- naive -----------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_naive_identity(n):
    assert permanent_naive(np.eye(n)).value == 1


@pytest.mark.parametrize("n", [1, 3, 6, 9])
def test_naive_all_ones(n):
    assert permanent_naive(np.ones((n, n))).value == math.factorial(n)


def test_naive_hom_matrix():
    assert permanent_naive(np.array([[1, -1], [1, 1]])).value == 0


def test_naive_matches_laplace(rng):
    for n in range(1, 7):
        m = rand_c(rng, n)
        ref = laplace_oracle(m.tolist())
        assert abs(permanent_naive(m).value - ref) <= 1e-12 * max(1, abs(ref))


def test_naive_limit():
    with pytest.raises(DimensionError):
        permanent_naive(np.eye(11))


# --- fast algorithms ----------------------------------------------------------


@pytest.mark.parametrize("fn", FAST)
def test_fast_matches_naive_n7(fn, rng):
    for _ in range(100):
        m = rand_c(rng, 7)
        ref = permanent_naive(m).value
        assert abs(fn(m).value - ref) / abs(ref) <= 1e-10


@pytest.mark.parametrize("fn", FAST)
def test_fast_identity_20(fn):
    assert abs(fn(np.eye(20)).value - 1) <= 1e-9


@pytest.mark.parametrize("fn", FAST)
def test_fast_all_ones_12(fn):
    assert abs(fn(np.ones((12, 12))).value - 479001600) / 479001600 <= 1e-10


@pytest.mark.parametrize("fn", FAST)
def test_fast_single_entry(fn):
    assert fn(np.array([[2.5 - 1j]])).value == 2.5 - 1j


@pytest.mark.parametrize("fn", FAST)
def test_canonical_dip_n10(fn):
    m = build_transfer_matrix(canonical_dip(10)).entries
    assert abs(fn(m).value) / math.factorial(10) <= 1e-9


@pytest.mark.parametrize("fn", FAST)
def test_fast_limit(fn):
    with pytest.raises(DimensionError):
        fn(np.eye(31))
    with pytest.raises(DimensionError):
        fn(np.ones((2, 3)))


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        permanent_ryser(np.array([[np.nan]]))


def test_result_metadata():
    r = permanent_glynn(np.eye(3))
    assert (r.algorithm, r.dim) == ("glynn", 3)
    assert abs(r) == pytest.approx(1.0)


def test_dispatch_unknown():
    with pytest.raises(ValueError):
        permanent(np.eye(2), "gurvits")


@pytest.mark.parametrize("n", [2, 9, 16])
@pytest.mark.parametrize("fn", FAST)
def test_thread_count_bitwise_stable(fn, n, rng):
    m = rand_c(rng, n)
    single = fn(m, threads=1).value
    for threads in (2, 3, 5):
        assert fn(m, threads=threads).value == single


@pytest.mark.parametrize("fn", FAST)
def test_precisions_agree(fn, rng):
    m = rand_c(rng, 12)
    a, b = fn(m, precision="double").value, fn(m, precision="extended").value
    assert abs(a - b) <= 1e-10 * abs(b)
    with pytest.raises(ValueError):
        fn(m, precision="quad")


def test_fault_hook_changes_value(rng):
    m = rand_c(rng, 5)
    assert abs(permanent_ryser(m, _flip_term=1).value - permanent_ryser(m).value) > 1e-6


@pytest.mark.parametrize("alg", ["naive", "ryser", "glynn"])
def test_batch_matches_single(alg, rng):
    for n in (1, 2, 4, 6):
        stack = np.array([rand_c(rng, n) for _ in range(20)])
        ref = np.array([permanent_naive(m).value for m in stack])
        assert np.all(np.abs(permanent_batch(stack, alg) - ref) <= 1e-12 * np.maximum(1, np.abs(ref)))


# --- properties ---------------------------------------------------------------

complex_entries = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)


def square(max_n):
    return st.integers(1, max_n).flatmap(
        lambda n: arrays(np.complex128, (n, n), elements=complex_entries)
    )


@settings(max_examples=150, deadline=None)
@given(square(6))
def test_oracle_equivalence_property(m):
    ref = permanent_naive(m).value
    for fn in FAST:
        assert abs(fn(m).value - ref) / max(1, abs(ref)) <= 1e-10


@settings(max_examples=100, deadline=None)
@given(square(7), st.data())
def test_row_column_permutation_invariance(m, data):
    n = len(m)
    p = data.draw(st.permutations(range(n)))
    q = data.draw(st.permutations(range(n)))
    ref = permanent_ryser(m).value
    got = permanent_ryser(m[np.ix_(p, q)]).value
    assert abs(got - ref) <= 1e-10 * max(1, abs(ref))


@settings(max_examples=100, deadline=None)
@given(square(7), st.data(), complex_entries)
def test_multilinear_in_rows(m, data, s):
    i = data.draw(st.integers(0, len(m) - 1))
    scaled = m.copy()
    scaled[i] *= s
    for fn in FAST:
        base = s * fn(m).value
        assert abs(fn(scaled).value - base) <= 1e-10 * abs(base) + 1e-12


@settings(max_examples=100, deadline=None)
@given(square(8), st.data(), st.floats(-10, 10))
def test_column_phase_keeps_modulus(m, data, alpha):
    j = data.draw(st.integers(0, len(m) - 1))
    rotated = m.copy()
    rotated[:, j] *= np.exp(1j * alpha)
    a, b = abs(permanent_glynn(m).value), abs(permanent_glynn(rotated).value)
    assert abs(a - b) <= 1e-12 * max(1, a)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 10).flatmap(lambda n: arrays(float, (n, n), elements=st.floats(-50, 50))))
def test_unit_modulus_bound(phases):
    m = np.exp(1j * phases)
    n = len(m)
    for fn in FAST:
        assert abs(fn(m).value) <= math.factorial(n) * (1 + 1e-12)
