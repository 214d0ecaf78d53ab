import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stbcfast import codec
from stbcfast.codec import (
    coding_constants, constellation, detect_indices, detect_symbols, effective_channel, encode, vec,
)

from conftest import crandn

K = coding_constants()


def test_golden_ratio_pair():
    assert K.b.real == pytest.approx(1.6180339887, abs=1e-10)
    assert K.d.real == pytest.approx(-0.6180339887, abs=1e-10)
    assert K.gamma == 1j


def test_a_and_c_energies():
    b, d = K.b.real, K.d.real
    assert abs(K.a) ** 2 == pytest.approx((1 + d**2) / 5, abs=1e-15)
    assert abs(K.c) ** 2 == pytest.approx((1 + b**2) / 5, abs=1e-15)


def test_code_identities():
    a, b, c, d = K.a, K.b, K.c, K.d
    assert abs(abs(a) ** 2 + abs(c) ** 2 - 1) <= 1e-14
    assert abs(abs(a * b) ** 2 + abs(c * d) ** 2 - 1) <= 1e-14
    assert abs(abs(a) ** 2 * b + abs(c) ** 2 * d) <= 1e-14


def test_encode_zero():
    assert np.array_equal(encode(np.zeros(4)), np.zeros((2, 2)))


def test_encode_first_symbol():
    np.testing.assert_array_equal(encode([1, 0, 0, 0]), [[K.a, 0], [0, K.c]])


def test_encode_energy_matches_symbol_energy(rng):
    # Expanding tr(X X^H): the cross term carries |a|^2 b + |c|^2 d, which is 0.
    for kind in ("qpsk", "16qam"):
        cons = constellation(kind)
        for _ in range(200):
            x = cons.points[rng.integers(len(cons), size=4)]
            X = encode(x)
            assert np.trace(X @ X.conj().T) == pytest.approx(np.sum(np.abs(x) ** 2), abs=1e-13)
    x = crandn(rng, 4)
    X = encode(x)
    assert np.trace(X @ X.conj().T).real == pytest.approx(np.sum(np.abs(x) ** 2), rel=1e-13)
    qpsk = constellation("qpsk").points
    X = encode(qpsk[[0, 1, 2, 3]])
    assert np.trace(X @ X.conj().T).real == pytest.approx(4.0, abs=1e-13)


def test_encode_rejects_wrong_length():
    with pytest.raises(ValueError):
        encode([1, 2, 3])


def test_effective_channel_zero():
    assert np.array_equal(effective_channel(np.zeros((3, 2))), np.zeros((6, 4)))


def test_effective_channel_single_antenna():
    a, b, g = K.a, K.b, K.gamma
    np.testing.assert_array_equal(
        effective_channel([[1, 0]]), [[a, a * b, 0, 0], [0, 0, g * a, g * a * b]]
    )


def test_effective_channel_rejects_wrong_shape():
    with pytest.raises(ValueError):
        effective_channel(np.ones((4, 3)))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 64))
def test_defining_equation(seed, n):
    rng = np.random.default_rng(seed)
    H, x = crandn(rng, n, 2), crandn(rng, 4)
    lhs = vec(H @ encode(x))
    rhs = effective_channel(H) @ x
    assert np.linalg.norm(lhs - rhs) <= 1e-13 * max(1.0, np.linalg.norm(rhs))


def test_statistical_orthogonality():
    rng = np.random.default_rng(3)
    off = ~np.eye(4, dtype=bool)

    def mean_offdiag(n):
        vals = []
        for _ in range(200):
            E = effective_channel(crandn(rng, n, 2))
            vals.append(np.mean(np.abs((E.conj().T @ E)[off])) / n)
        return np.mean(vals)

    m100, m200 = mean_offdiag(100), mean_offdiag(200)
    assert m100 < 0.15
    assert m200 < m100


# -- constellations -----------------------------------------------------------
@pytest.mark.parametrize("kind,size", [("qpsk", 4), ("16qam", 16)])
def test_constellation_unit_energy(kind, size):
    cons = constellation(kind)
    assert len(cons) == size
    assert np.mean(np.abs(cons.points) ** 2) == pytest.approx(1.0, abs=1e-14)
    assert sorted(cons.labels.tolist()) == list(range(size))


@pytest.mark.parametrize("kind", ["qpsk", "16qam"])
def test_gray_labels_neighbours_differ_by_one_bit(kind):
    cons = constellation(kind)
    pts = cons.points
    dmin = min(abs(p - q) for i, p in enumerate(pts) for q in pts[i + 1:])
    for i, p in enumerate(pts):
        for j, q in enumerate(pts):
            if i != j and abs(abs(p - q) - dmin) < 1e-12:
                assert bin(cons.labels[i] ^ cons.labels[j]).count("1") == 1


def test_unknown_constellation():
    with pytest.raises(ValueError):
        constellation("8psk")


# -- detection ------------------------------------------------------------------
def test_detect_exact_recovery():
    cons = constellation("qpsk")
    rho = 10.0
    x = cons.points[[0, 3, 1, 2, 2, 1, 0, 3]]
    got = detect_symbols(math.sqrt(rho / 2) * x, np.ones(8), cons, rho)
    np.testing.assert_array_equal(got.ravel(), x)
    assert got.shape == (2, 4)


def test_detect_single_candidate():
    cons = codec.Constellation("one", np.array([0.3 + 0.1j]), np.array([0]))
    idx = detect_indices(np.array([5.0, -2j, 0.0, 1.0]), np.ones(4), cons, 2.0)
    assert idx.tolist() == [0, 0, 0, 0]


def test_detect_empty_constellation():
    cons = codec.Constellation("none", np.array([], dtype=complex), np.array([], dtype=int))
    with pytest.raises(ValueError):
        detect_indices(np.zeros(4), np.ones(4), cons, 1.0)


def test_detect_tie_goes_to_lowest_index():
    cons = constellation("qpsk")
    # Origin is equidistant from all four points.
    assert detect_indices(np.zeros(4), np.ones(4), cons, 2.0).tolist() == [0, 0, 0, 0]


@pytest.mark.parametrize("kind", ["qpsk", "16qam"])
def test_detect_matches_brute_force(rng, kind):
    cons = constellation(kind)
    rho = 3.0
    for _ in range(50):
        gains = 0.5 + rng.random(8) + 0.2j * rng.standard_normal(8)
        filtered = np.sqrt(rho / 2) * gains * cons.points[rng.integers(len(cons), size=8)]
        filtered = filtered + 0.8 * crandn(rng, 8)
        got = detect_indices(filtered, gains, cons, rho)
        for p in range(8):
            best, best_d = None, np.inf
            for i, pt in enumerate(cons.points):
                dist = abs(filtered[p] - np.sqrt(rho / 2) * gains[p] * pt)
                if dist < best_d:
                    best, best_d = i, dist
            assert got[p] == best


def test_detect_batched_matches_per_block(rng):
    cons = constellation("qpsk")
    f = crandn(rng, 8, 5)
    g = 1 + 0.1 * crandn(rng, 8)
    batched = detect_indices(f, g, cons, 4.0)
    for b in range(5):
        assert np.array_equal(batched[:, b], detect_indices(f[:, b], g, cons, 4.0))
