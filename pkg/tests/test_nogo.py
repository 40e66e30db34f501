import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sbqc import nogo
from sbqc.statevec import StateVector


@given(st.floats(0, 2 * np.pi))
def test_isometry_columns_orthonormal(delta):
    d = nogo.isometry_matrix(delta)
    assert np.allclose(d.conj().T @ d, np.eye(2))


def test_deviation_examples():
    assert nogo.product_deviation(nogo.isometry_output(0.7, 0.0)) < 1e-12
    assert nogo.product_deviation(nogo.isometry_output(0.7, np.pi)) < 1e-12
    assert nogo.product_deviation(nogo.isometry_output(0.0, 1.3)) < 1e-12
    assert nogo.product_deviation(nogo.isometry_output(np.pi / 2, np.pi / 2)) > 0.1
    bell = StateVector.from_vector([1, 0, 0, 1], [0, 1])
    assert nogo.product_deviation(bell) == pytest.approx(0.5)
    assert nogo.product_deviation(StateVector.from_vector([1, 1, 1, 1], [0, 1])) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        nogo.product_deviation(StateVector.from_vector([1, 0], [0]))


def test_basis_change_keeps_deviation():
    for d, t in [(0.3, 1.1), (2.0, 4.0), (np.pi / 2, np.pi / 2)]:
        a = nogo.product_deviation(nogo.isometry_output(d, t))
        b = nogo.product_deviation(nogo.isometry_output(d, t, basis="computational"))
        assert a == pytest.approx(b, abs=1e-12)


def test_svd_matches_determinant_oracle():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        st_ = StateVector.from_vector(v, [0, 1])
        assert nogo.product_deviation(st_) == pytest.approx(nogo.deviation_from_det(st_), abs=1e-10)


def test_scan_matches_analytic_zero_set():
    t0 = time.perf_counter()
    res = nogo.separability_scan(64)
    assert time.perf_counter() - t0 < 10
    assert res.agrees()
    # theta in {0, pi} or delta in {0, pi}: 2*64 + 2*64 - 4
    assert int(res.zero_mask().sum()) == 252
    assert res.deviation[~res.zero_mask()].min() > 1e-6
    assert res.to_csv().startswith("theta,delta,deviation\n")
    with pytest.raises(ValueError):
        nogo.separability_scan(4)


def test_image_rank():
    assert nogo.image_rank(32) <= 3


def test_generic_isometries_entangle():
    worst = nogo.isometry_scan(50, resolution=16, seed=1)
    assert (worst > 1e-6).all()


@pytest.mark.parametrize(
    "f, invariant, accuracy",
    [
        ("identity", {0, 4}, 1.0),
        ("negate", {0, 2, 4, 6}, 0.5),
        ("shift1", {1, 5}, 0.0),
        ("double", set(range(8)), 0.25),
        ("constant", set(range(8)), 0.25),
        ("independent", set(range(8)), 0.25),
    ],
)
def test_attack_exact(f, invariant, accuracy):
    r = nogo.correlated_key_attack(f)
    assert set(r.invariant) == invariant
    assert r.accuracy == accuracy
    # any deterministic key relation leaks (phi_j - phi_i) mod 4 completely
    assert r.mi_bits == (0.0 if f == "independent" else pytest.approx(2.0))


@given(st.integers(0, 7), st.integers(0, 7))
def test_identity_attack_any_angles(pi, pj):
    r = nogo.correlated_key_attack("identity", pi, pj)
    assert r.accuracy == 1.0 and set(r.invariant) == {0, 4}


def test_independent_joint_law_factorises():
    law = nogo.joint_law(None, 2, 5)
    assert sum(law.values()) == 1
    assert all(p == Fraction(1, 64) for p in law.values())
    assert nogo.mutual_information(law) == 0.0


def test_sampled_mi_small():
    r = nogo.correlated_key_attack("independent", samples=100_000, seed=3)
    assert r.mi_bits <= 0.01
    r = nogo.correlated_key_attack("identity", samples=20_000, seed=3)
    assert r.accuracy == 1.0


def test_plugin_mi():
    assert nogo.plugin_mutual_information([(0, 0), (1, 1)] * 10) == pytest.approx(1.0)
    assert nogo.plugin_mutual_information([(a, b) for a in range(2) for b in range(2)]) == 0.0


def test_guess_probability():
    assert nogo.guess_probability(8, 0) == 1
    assert nogo.guess_probability(8, 3) == Fraction(1, 512)
    assert nogo.guess_probability(2, 10) == Fraction(1, 1024)
    with pytest.raises(ValueError):
        nogo.guess_probability(1, 2)
    with pytest.raises(ValueError):
        nogo.guess_probability(8, -1)


def test_min_m():
    assert nogo.min_m(1024, 2) == 7  # 8^7 = 2^21 >= 2^20
    assert nogo.min_m(2**8, 2) == 6
    assert nogo.min_m(2**9, 2) == 6  # 8^6 = 2^18 exactly
    assert nogo.min_m(8, 1.5) == 2
    assert nogo.min_m(16, 1, theta_set_size=2) == 4
    with pytest.raises(ValueError):
        nogo.min_m(1, 2)
    with pytest.raises(ValueError):
        nogo.min_m(16, 0)


@given(st.integers(2, 2**20), st.integers(1, 4))
def test_min_m_is_minimal(n, c):
    m = nogo.min_m(n, c)
    assert nogo.guess_probability(8, m) <= Fraction(1, n**c)
    if m > 0:
        assert nogo.guess_probability(8, m - 1) > Fraction(1, n**c)
