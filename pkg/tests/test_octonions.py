import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from loopflat.octonions import (
    STRUCT,
    alternativity_defect,
    g2_basis,
    imag_multiply,
    multiply,
    right_multiplication,
)

vec8 = st.lists(st.floats(-2, 2), min_size=8, max_size=8).map(np.array)


def test_table_is_alternative():
    assert alternativity_defect() == 0


def test_units_square_to_minus_one():
    for a in range(1, 8):
        e = np.eye(8)[a]
        assert np.allclose(multiply(e, e), -np.eye(8)[0])


def test_quaternion_rules():
    i, j, k = np.eye(8)[1], np.eye(8)[2], np.eye(8)[3]
    assert np.allclose(multiply(i, j), k)
    assert np.allclose(multiply(j, i), -k)


@settings(max_examples=50, deadline=None)
@given(vec8, vec8)
def test_norm_is_multiplicative(u, v):
    assert np.isclose(np.linalg.norm(multiply(u, v)), np.linalg.norm(u) * np.linalg.norm(v))


def test_g2_dimension_and_skew():
    B = np.array(g2_basis())
    assert B.shape == (14, 7, 7)
    assert np.abs(B + np.swapaxes(B, 1, 2)).max() < 1e-12


def test_g2_elements_are_derivations_on_all_products():
    E = np.eye(7)
    for D in g2_basis():
        D = np.asarray(D)
        for a in range(7):
            for b in range(7):
                lhs = D @ imag_multiply(E[a], E[b])[1:]
                rhs = imag_multiply(D @ E[a], E[b]) + imag_multiply(E[a], D @ E[b])
                assert abs(rhs[0]) < 1e-12
                assert np.abs(lhs - rhs[1:]).max() < 1e-12


def test_right_multiplication_matches_product():
    rng = np.random.default_rng(0)
    u, v = rng.standard_normal(7), rng.standard_normal(7)
    u /= np.linalg.norm(u)
    v -= (v @ u) * u
    assert np.allclose(right_multiplication(u) @ v, imag_multiply(v, u)[1:])


def test_structure_tensor_shape():
    assert STRUCT.shape == (8, 8, 8)
