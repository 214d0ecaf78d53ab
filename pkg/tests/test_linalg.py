import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stbcfast import linalg
from stbcfast.linalg import (
    DimensionError, SingularMatrixError, count_ops, gram, hpd_inverse, matmul,
    symmetric_permute, invert_permutation, trailing_permutation,
)

from conftest import crandn, random_hpd


def naive_matmul(A, B):
    out = np.zeros((A.shape[0], B.shape[1]), dtype=complex)
    for i in range(A.shape[0]):
        for j in range(B.shape[1]):
            for k in range(A.shape[1]):
                out[i, j] += A[i, k] * B[k, j]
    return out


# -- matmul -----------------------------------------------------------------
def test_matmul_identity(rng):
    M = crandn(rng, 3, 3)
    assert np.array_equal(matmul(np.eye(3), M), M)


def test_matmul_j_squared():
    assert matmul([[1j]], [[1j]])[0, 0] == -1


def test_matmul_against_triple_loop(rng):
    A, B = crandn(rng, 5, 4), crandn(rng, 4, 6)
    np.testing.assert_allclose(matmul(A, B), naive_matmul(A, B), rtol=0, atol=1e-13)


def test_matmul_dimension_mismatch():
    with pytest.raises(DimensionError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.integers(1, 12), st.integers(1, 12), st.integers(1, 12))
def test_matmul_associative(seed, p, q, r, s):
    rng = np.random.default_rng(seed)
    A, B, C = crandn(rng, p, q), crandn(rng, q, r), crandn(rng, r, s)
    left, right = matmul(matmul(A, B), C), matmul(A, matmul(B, C))
    assert linalg.relative_error(left, right) <= 1e-12


# -- gram ---------------------------------------------------------------------
def test_gram_identity():
    assert np.array_equal(gram(np.eye(4)), np.eye(4))


def test_gram_column_norm():
    assert gram([[1], [1j]])[0, 0] == 2


def test_gram_matches_matmul(rng):
    G = crandn(rng, 8, 4)
    np.testing.assert_allclose(gram(G), matmul(G.conj().T, G), atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 30), st.integers(1, 20))
def test_gram_exactly_hermitian_and_psd(seed, rows, cols):
    rng = np.random.default_rng(seed)
    Z = gram(crandn(rng, rows, cols))
    assert np.array_equal(Z, Z.conj().T)
    assert np.all(np.linalg.eigvalsh(Z) >= -1e-10 * max(1.0, np.abs(Z).max()))


# -- hpd_inverse ----------------------------------------------------------------
def test_hpd_inverse_identity():
    assert np.array_equal(hpd_inverse(np.eye(5)), np.eye(5))


def test_hpd_inverse_diagonal():
    np.testing.assert_allclose(hpd_inverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]), rtol=1e-15, atol=0)


def test_hpd_inverse_empty():
    assert hpd_inverse(np.zeros((0, 0))).shape == (0, 0)


@pytest.mark.parametrize("n", [1, 4, 16, 64, 128])
def test_hpd_inverse_residual(rng, n):
    Z = gram(crandn(rng, 2 * n, n))
    Zi = hpd_inverse(Z)
    assert np.linalg.norm(Z @ Zi - np.eye(n)) <= 1e-10 * np.sqrt(n)
    assert np.array_equal(Zi, Zi.conj().T)


def test_hpd_inverse_reports_failing_pivot():
    Z = np.diag([1.0, 2.0, -1.0, 3.0])
    with pytest.raises(SingularMatrixError) as err:
        hpd_inverse(Z)
    assert err.value.pivot == 2
    assert "pivot 2" in str(err.value)


def test_hpd_inverse_rank_deficient():
    v = np.array([[1.0], [1j], [2.0]])
    with pytest.raises(SingularMatrixError):
        hpd_inverse(v @ v.conj().T)


def test_hpd_inverse_non_finite():
    with pytest.raises(ValueError, match="non-finite"):
        hpd_inverse(np.array([[1.0, 0], [0, np.nan]]))


def test_hpd_inverse_non_square():
    with pytest.raises(DimensionError):
        hpd_inverse(np.ones((2, 3)))


# -- permutations -------------------------------------------------------------
def test_permute_identity(rng):
    M = crandn(rng, 5, 5)
    assert np.array_equal(symmetric_permute(M, np.arange(5)), M)


def test_permute_swap():
    np.testing.assert_array_equal(symmetric_permute(np.diag([1.0, 2.0]), [1, 0]), np.diag([2.0, 1.0]))


def test_permute_matches_inverse_of_permuted(rng):
    Z = random_hpd(rng, 12)
    p = rng.permutation(12)
    lhs = symmetric_permute(hpd_inverse(Z), p)
    rhs = hpd_inverse(Z[np.ix_(p, p)])
    assert linalg.relative_error(lhs, rhs) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(st.permutations(list(range(9))))
def test_permute_involution(p):
    M = np.arange(81, dtype=complex).reshape(9, 9)
    back = symmetric_permute(symmetric_permute(M, p), invert_permutation(p))
    assert np.array_equal(back, M)


def test_permute_rejects_non_bijection():
    with pytest.raises(ValueError):
        symmetric_permute(np.eye(3), [0, 0, 1])
    with pytest.raises(DimensionError):
        symmetric_permute(np.eye(3), [0, 1])


def test_trailing_permutation():
    assert trailing_permutation(6, [1, 2]).tolist() == [0, 3, 4, 5, 1, 2]


# -- counting -------------------------------------------------------------------
def test_count_matmul_macs():
    with count_ops() as c:
        matmul(np.ones((3, 5)), np.ones((5, 7)))
    assert c.ops == 3 * 5 * 7


def test_counter_inactive_outside_context():
    with count_ops() as c:
        pass
    matmul(np.ones((2, 2)), np.ones((2, 2)))
    assert c.ops == 0
