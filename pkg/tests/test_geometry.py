import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fshom.dipfinder import canonical_dip
from fshom.geometry import (
    Geometry,
    InfeasibleGeometryError,
    PhaseConfig,
    angles_from_phases,
    build_transfer_matrix,
    norm_factor,
    phases_from_geometry,
)


def exp_table(deltas, c=1.0):
    """Entry-by-entry oracle using cmath, no reduction."""
    n = len(deltas)
    return np.array([[c * cmath.exp(-1j * r * deltas[m]) for m in range(n)] for r in range(1, n + 1)])


def test_phases_from_geometry_endpoints():
    geom = Geometry(2, 1.0, math.pi, (0.0, math.pi / 2))
    assert np.allclose(phases_from_geometry(geom).deltas, [0.0, math.pi], atol=1e-15)
    assert phases_from_geometry(geom).physical


def test_duplicate_angles_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        Geometry(3, 1.0, 1.0, (0.0, 0.0, 0.0))
    with pytest.raises(ValueError, match="duplicate"):
        Geometry(2, 1.0, 1.0, (0.1, 0.1 + 1e-10))


@pytest.mark.parametrize("bad", [math.nan, math.inf])
def test_non_finite_rejected(bad):
    with pytest.raises(ValueError):
        Geometry(2, 1.0, 1.0, (0.0, bad))
    with pytest.raises(ValueError):
        Geometry(2, bad, 1.0, (0.0, 0.1))


def test_geometry_invariants():
    with pytest.raises(ValueError):
        Geometry(1, 1.0, 1.0, (0.0,))
    with pytest.raises(ValueError):
        Geometry(2, -1.0, 1.0, (0.0, 0.1))
    with pytest.raises(ValueError):
        Geometry(2, 1.0, 1.0, (0.0,))


def test_canonical_n3_round_trip():
    target = canonical_dip(3)
    kd = 8 * math.pi
    angles = [math.asin(p / kd) for p in target.deltas]
    got = phases_from_geometry(Geometry(3, 1.0, kd, angles))
    assert np.allclose(got.deltas, [2 * math.pi / 3, 4 * math.pi, 6 * math.pi], rtol=0, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_angles_from_canonical_phases_feasible(n):
    kd = 2 * math.pi * n + 1
    geom = angles_from_phases(canonical_dip(n), kd, 1.0)
    assert geom.n_sources == n
    assert all(abs(a) < math.pi / 2 for a in geom.detector_angles)


def test_angles_infeasible():
    with pytest.raises(InfeasibleGeometryError) as info:
        angles_from_phases(PhaseConfig((0.0, 3 * math.pi)), 2 * math.pi, 1.0)
    assert info.value.min_kd == pytest.approx(3 * math.pi)
    assert "smallest feasible" in str(info.value)


def test_angles_from_phases_arcsin_one():
    geom = angles_from_phases(PhaseConfig((0.0, math.pi)), math.pi, 1.0)
    assert geom.detector_angles == pytest.approx((0.0, math.pi / 2))


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-1.5, 1.5), min_size=2, max_size=8, unique=True).filter(
        lambda a: min(abs(x - y) for i, x in enumerate(a) for y in a[i + 1:]) > 1e-6
    ),
    st.floats(0.5, 100.0),
)
def test_angle_round_trip(angles, kd):
    geom = Geometry(len(angles), 1.0, kd, tuple(angles))
    back = angles_from_phases(phases_from_geometry(geom), kd, 1.0)
    assert np.max(np.abs(np.subtract(back.detector_angles, angles))) <= 1e-12


def test_transfer_matrix_hom_example():
    tm = build_transfer_matrix(PhaseConfig((0.0, math.pi)), "unit")
    assert np.allclose(tm.entries, [[1, -1], [1, 1]], atol=1e-15)
    assert np.allclose(tm.entries, exp_table([0.0, math.pi]), atol=1e-15)


def test_transfer_matrix_zero_phases():
    assert np.array_equal(build_transfer_matrix(PhaseConfig((0.0,) * 4)).entries, np.ones((4, 4)))


def test_sqrt_modes_modulus(rng):
    d = rng.uniform(-10, 10, 6)
    tm = build_transfer_matrix(PhaseConfig(tuple(d)), "sqrt_modes")
    assert np.allclose(np.abs(tm.entries), 1 / math.sqrt(6), rtol=1e-15)
    assert tm.c_norm == pytest.approx(1 / math.sqrt(6))


def test_matches_exp_table(rng):
    for n in range(2, 9):
        d = rng.uniform(-20, 20, n)
        assert np.allclose(build_transfer_matrix(PhaseConfig(tuple(d))).entries, exp_table(d), atol=1e-13)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-30, 30), min_size=2, max_size=7), st.data())
def test_two_pi_shift_leaves_entries(deltas, data):
    i = data.draw(st.integers(0, len(deltas) - 1))
    shifted = list(deltas)
    shifted[i] += 2 * math.pi
    a = build_transfer_matrix(PhaseConfig(tuple(deltas))).entries
    b = build_transfer_matrix(PhaseConfig(tuple(shifted))).entries
    # float shift moves the phase by <= 1 ulp of ~36; times row index <= 7
    assert np.max(np.abs(a - b)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=2, max_size=8), st.floats(0.01, 10))
def test_entries_have_norm_modulus(deltas, c):
    tm = build_transfer_matrix(PhaseConfig(tuple(deltas)), c)
    assert np.allclose(np.abs(tm.entries), c, rtol=1e-14, atol=0)


def test_norm_factor():
    assert norm_factor("unit", 5) == 1.0
    assert norm_factor("sqrt_modes", 4) == 0.5
    assert norm_factor(0.3, 9) == 0.3
    with pytest.raises(ValueError):
        norm_factor("bogus", 2)
    with pytest.raises(ValueError):
        norm_factor(-1.0, 2)


def test_phase_config_validation():
    with pytest.raises(ValueError):
        PhaseConfig((1.0,))
    with pytest.raises(ValueError):
        PhaseConfig((0.0, math.nan))
    with pytest.raises(ValueError):
        PhaseConfig((0.5, 0.5), physical=True)
    PhaseConfig((0.5, 0.5))  # allowed for mathematical exploration


def test_json_round_trip():
    geom = Geometry(3, 2.5, 1.3, (0.1, -0.2, 0.7))
    assert geom.to_dict() == {"n": 3, "d": 2.5, "k": 1.3, "angles": [0.1, -0.2, 0.7]}
    assert Geometry.from_dict(geom.to_dict()) == geom
    pc = PhaseConfig((0.1, 2.0), physical=True)
    assert pc.to_dict() == {"deltas": [0.1, 2.0], "physical": True}
    assert PhaseConfig.from_dict(pc.to_dict()) == pc
