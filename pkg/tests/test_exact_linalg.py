"""Exact transform algebra: frozen oracle values and invariants."""
import random
from fractions import Fraction

import pytest

from qcfa.errors import ExactnessError
from qcfa.exact_linalg import (
    MAT_A,
    MAT_A_INV,
    MAT_B,
    MAT_B_INV,
    MATRICES,
    UNIT_E1,
    ScaledVec3,
    exact_apply,
    f_value,
    in_K,
    residual_norm_sq,
)


def plain_matmul(rows, v):
    """Independent integer matrix-vector product for cross-checks."""
    return tuple(sum(rows[i][j] * v[j] for j in range(3)) for i in range(3))


def test_named_matrices_satisfy_mtm_25():
    for m in MATRICES.values():
        gram = [
            [sum(m.rows[k][i] * m.rows[k][j] for k in range(3))
             for j in range(3)]
            for i in range(3)
        ]
        assert gram == [[25, 0, 0], [0, 25, 0], [0, 0, 25]], m.tag


def test_apply_a_to_start_vector():
    v = exact_apply(MAT_A, UNIT_E1)
    assert v == ScaledVec3((4, -3, 0), 1)


def test_inverse_cancels_single_application():
    v = exact_apply(MAT_A_INV, exact_apply(MAT_A, UNIT_E1))
    assert v == UNIT_E1
    assert v.exponent == 0  # canonicalization divided out the 5s


def test_ba_chain_matches_plain_arithmetic():
    # hand/plain-arithmetic oracle: B @ (A @ e1)
    expect = plain_matmul(MAT_B.rows, plain_matmul(MAT_A.rows, (1, 0, 0)))
    assert expect == (16, -15, -12)
    assert sum(x * x for x in expect) == 625  # = 25^2, still a unit vector
    v = exact_apply(MAT_B, exact_apply(MAT_A, UNIT_E1))
    assert v == ScaledVec3((16, -15, -12), 2)


@pytest.mark.parametrize("u,expected", [
    ((1, 0, 0), 4),
    ((0, 1, 1), 6),
    ((4, -3, 0), 7),  # 16 - 9 + 0
])
def test_f_value(u, expected):
    assert f_value(u) == expected


@pytest.mark.parametrize("u,expected", [
    ((1, 0, 0), True),
    ((-1, 0, 0), True),
    ((5, 0, 0), False),   # first coordinate divisible by 5
    ((1, 1, 1), False),   # u2*u3 not divisible by 5
    ((2, 5, 3), True),
])
def test_in_K(u, expected):
    assert in_K(u) is expected


def test_residual_start_vector_is_zero():
    assert residual_norm_sq(UNIT_E1) == 0


def test_residual_after_one_application():
    assert residual_norm_sq(ScaledVec3((4, -3, 0), 1)) == Fraction(9, 25)


def test_residual_of_mismatched_word_pair():
    # machine chain for the word "ab": apply A, B, then the inverses
    # front to back; plain arithmetic cross-check alongside.
    v = UNIT_E1
    plain = (1, 0, 0)
    for m in (MAT_A, MAT_B, MAT_A_INV, MAT_B_INV):
        v = exact_apply(m, v)
        plain = plain_matmul(m.rows, plain)
    assert plain == (616, -60, 87)
    assert 616**2 + 60**2 + 87**2 == 390625  # 25^4: unit norm at e=4
    assert v == ScaledVec3((616, -60, 87), 4)
    assert residual_norm_sq(v) == Fraction(11169, 390625)


def test_residual_requires_unit_vector():
    with pytest.raises(ExactnessError):
        residual_norm_sq(ScaledVec3((1, 1, 0), 0))


def test_canonical_form_divides_out_fives():
    v = ScaledVec3.canonical((25, 50, 75), 3)
    assert v == ScaledVec3((1, 2, 3), 1)
    # exponent floor at zero even if all coordinates stay divisible
    assert ScaledVec3.canonical((5, 5, 5), 0) == ScaledVec3((5, 5, 5), 0)


def test_unit_norm_conserved_over_random_words():
    rng = random.Random(6021023)
    mats = list(MATRICES.values())
    for _ in range(400):
        v = UNIT_E1
        for _ in range(rng.randint(1, 12)):
            v = exact_apply(rng.choice(mats), v)
        assert v.is_unit()
        a, b, c = v.coords
        if v.exponent > 0:
            assert not (a % 5 == 0 and b % 5 == 0 and c % 5 == 0)


def test_inverse_cancellation_on_random_unit_vectors():
    # random unit vectors generated by random words applied to e1
    rng = random.Random(17)
    mats = list(MATRICES.values())
    pairs = ((MAT_A, MAT_A_INV), (MAT_B, MAT_B_INV))
    for _ in range(1000):
        v = UNIT_E1
        for _ in range(rng.randint(0, 8)):
            v = exact_apply(rng.choice(mats), v)
        fwd, inv = pairs[rng.randint(0, 1)]
        assert exact_apply(inv, exact_apply(fwd, v)) == v


def test_k_closure_exhaustive_mod5():
    # every residue triple in K stays in K under both transforms
    for a in range(5):
        for b in range(5):
            for c in range(5):
                u = (a, b, c)
                if not in_K(u):
                    continue
                assert in_K(MAT_A.mul_vec_mod(u, 5))
                assert in_K(MAT_B.mul_vec_mod(u, 5))
