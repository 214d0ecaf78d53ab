"""Dense complex-matrix kernels.

Every matrix in this package is a ``complex128`` numpy array.  The kernels
here add dimension checking, exact Hermitian symmetry where it is cheap to
guarantee, and optional operation counting (see :func:`count_ops`).
"""

from __future__ import annotations

import contextlib
import contextvars
import functools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

__all__ = [
    "DimensionError",
    "SingularMatrixError",
    "OpCounter",
    "count_ops",
    "record_ops",
    "ctranspose",
    "matmul",
    "gram",
    "hpd_inverse",
    "add",
    "sub",
    "hermitize",
    "symmetric_permute",
    "invert_permutation",
    "trailing_permutation",
    "relative_error",
    "hermitian_defect",
]


class DimensionError(ValueError):
    """Raised when operand shapes are not conformable."""


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a Hermitian factorization breaks down.

    Attributes
    ----------
    pivot : int
        Zero-based index of the first non-positive pivot.
    """

    def __init__(self, pivot: int, size: int | None = None):
        self.pivot = pivot
        self.size = size
        where = f" of {size}x{size} matrix" if size is not None else ""
        super().__init__(
            f"matrix is not positive definite: factorization failed at pivot {pivot}{where}"
        )


# xxxxxxxxxxxxxxx Operation counting xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
@dataclass
class OpCounter:
    """Tally of complex arithmetic.

    One multiply-accumulate counts as one operation; a bare addition or
    subtraction also counts as one.
    """

    ops: int = 0

    def add(self, n: int) -> None:
        self.ops += int(n)


_COUNTER: contextvars.ContextVar[OpCounter | None] = contextvars.ContextVar(
    "stbcfast_op_counter", default=None
)


@contextlib.contextmanager
def count_ops():
    """Count operations performed by the kernels in this module.

    >>> with count_ops() as c:
    ...     _ = matmul(np.ones((2, 3)), np.ones((3, 4)))
    >>> c.ops
    24
    """
    counter = OpCounter()
    token = _COUNTER.set(counter)
    try:
        yield counter
    finally:
        _COUNTER.reset(token)


def record_ops(n: int) -> None:
    """Add ``n`` to the active counter, if any."""
    counter = _COUNTER.get()
    if counter is not None:
        counter.add(n)


# xxxxxxxxxxxxxxx Kernels xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def _as_matrix(A, name: str) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {A.shape}")
    return A


def _check_square(A: np.ndarray, name: str) -> int:
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A.shape[0]


def ctranspose(A) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(A).conj().T


def matmul(A, B) -> np.ndarray:
    """Complex matrix product ``A @ B`` with an explicit shape check."""
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    if A.shape[1] != B.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    record_ops(A.shape[0] * A.shape[1] * B.shape[1])
    return A @ B


def add(A, B) -> np.ndarray:
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    if A.shape != B.shape:
        raise DimensionError(f"cannot add {A.shape} and {B.shape}")
    record_ops(A.size)
    return A + B


def sub(A, B) -> np.ndarray:
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    if A.shape != B.shape:
        raise DimensionError(f"cannot subtract {B.shape} from {A.shape}")
    record_ops(A.size)
    return A - B


@functools.lru_cache(maxsize=256)
def _strict_upper(n: int) -> np.ndarray:
    mask = np.triu(np.ones((n, n), dtype=bool), 1)
    mask.flags.writeable = False
    return mask


def _real_diagonal(Z: np.ndarray) -> np.ndarray:
    Z.reshape(-1)[:: Z.shape[0] + 1].imag = 0.0
    return Z


def _mirror_lower(Z: np.ndarray) -> np.ndarray:
    # Keep the lower triangle, overwrite the upper with its conjugate.
    out = np.array(Z, dtype=complex, order="C")
    np.copyto(out, Z.conj().T, where=_strict_upper(Z.shape[0]))
    return _real_diagonal(out)


def hermitize(Z) -> np.ndarray:
    """Return ``(Z + Z^H) / 2``.

    The result is Hermitian bitwise: halving is exact, floating-point
    addition commutes and conjugation is exact.
    """
    Z = _as_matrix(Z, "Z")
    _check_square(Z, "Z")
    record_ops(Z.shape[0] * (Z.shape[0] + 1) // 2)
    out = 0.5 * Z
    # conj() copies, so the in-place add reads the unmodified halves.
    out += out.conj().T
    return out


def gram(G) -> np.ndarray:
    """Return ``G^H G``, exactly Hermitian.

    Only the lower triangle is trusted; the upper triangle is its mirror and
    the diagonal is forced real, so ``gram(G) == gram(G).conj().T`` holds
    bitwise.
    """
    G = _as_matrix(G, "G")
    rows, k = G.shape
    record_ops(rows * k * (k + 1) // 2)
    return _mirror_lower(G.conj().T @ G)


def hpd_inverse(Z) -> np.ndarray:
    """Invert a Hermitian positive-definite matrix.

    Uses a Cholesky factorization ``Z = L L^H`` followed by inversion from
    the triangular factor (LAPACK ``zpotrf``/``zpotri``).  Only the lower
    triangle of `Z` is read.

    Parameters
    ----------
    Z : (n, n) array_like
        Hermitian positive-definite matrix.

    Returns
    -------
    Zinv : (n, n) ndarray
        Exactly Hermitian inverse.

    Raises
    ------
    SingularMatrixError
        If a pivot of the factorization is not positive.
    """
    Z = _as_matrix(Z, "Z")
    n = _check_square(Z, "Z")
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    # One reduction is cheaper than an elementwise isfinite; any NaN/Inf poisons it.
    if not np.isfinite(Z.sum()):
        raise ValueError("matrix contains non-finite entries")
    # Textbook counts: factorization, triangular inverse, L^-H L^-1 product.
    record_ops((n**3 - n) // 6 + (n**3 - n) // 6 + n * (n + 1) * (n + 2) // 6)
    L, info = lapack.zpotrf(Z, lower=1, clean=1)
    if info > 0:
        raise SingularMatrixError(info - 1, n)
    if info < 0:  # pragma: no cover - argument error inside LAPACK
        raise ValueError(f"zpotrf: illegal value in argument {-info}")
    inv, info = lapack.zpotri(L, lower=1)
    if info > 0:  # pragma: no cover - zpotrf already caught this
        raise SingularMatrixError(info - 1, n)
    # zpotrf(clean=1) zeroed the strict upper triangle and zpotri leaves it.
    out = inv + inv.conj().T
    out.reshape(-1)[:: n + 1] *= 0.5
    return out


# xxxxxxxxxxxxxxx Permutations xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def _as_permutation(p, n: int | None = None) -> np.ndarray:
    p = np.asarray(p, dtype=np.intp)
    if p.ndim != 1:
        raise DimensionError("permutation must be 1-D")
    if n is not None and p.size != n:
        raise DimensionError(f"permutation of length {p.size} applied to dimension {n}")
    if not np.array_equal(np.sort(p), np.arange(p.size)):
        raise ValueError("not a permutation of 0..n-1")
    return p


def invert_permutation(p) -> np.ndarray:
    p = _as_permutation(p)
    inv = np.empty_like(p)
    inv[p] = np.arange(p.size)
    return inv


def trailing_permutation(n: int, indices) -> np.ndarray:
    """Permutation that keeps the order of all other indices and moves
    `indices` (in the given order) to the end."""
    indices = np.asarray(indices, dtype=np.intp)
    mask = np.ones(n, dtype=bool)
    mask[indices] = False
    if mask.sum() != n - indices.size:
        raise ValueError("duplicate indices")
    return np.concatenate([np.flatnonzero(mask), indices])


def symmetric_permute(Minv, p, check: bool = True) -> np.ndarray:
    """Return ``P Minv P^T`` where row ``i`` of the result is row ``p[i]``.

    If ``Minv`` is the inverse of ``Z`` then the result is the inverse of
    ``Z[p][:, p]``.  Pure data movement, no arithmetic.  ``check=False``
    skips validating `p`, for callers that built it as a permutation.
    """
    if check:
        Minv = _as_matrix(Minv, "Minv")
        p = _as_permutation(p, _check_square(Minv, "Minv"))
    return Minv.take(p, axis=0).take(p, axis=1)


# xxxxxxxxxxxxxxx Diagnostics xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def relative_error(A, B) -> float:
    """``||A - B||_F / ||B||_F`` (0 for two empty matrices)."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {B.shape}")
    if B.size == 0:
        return 0.0
    denom = np.linalg.norm(B)
    num = np.linalg.norm(A - B)
    return float(num / denom) if denom > 0 else float(num)


def hermitian_defect(Z) -> float:
    """``||Z - Z^H||_F / ||Z||_F``."""
    Z = np.asarray(Z)
    if Z.size == 0:
        return 0.0
    return float(np.linalg.norm(Z - Z.conj().T) / np.linalg.norm(Z))
