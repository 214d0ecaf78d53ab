"""Incremental maintenance of the decoder inverse.

A decode matrix partitioned as ``Z = [[A, B], [B^H, D]]`` has inverse
``[[F11, F12], [F12^H, F22]]`` with

    F22 = (D - B^H A^{-1} B)^{-1}
    F12 = -A^{-1} B F22
    F11 = A^{-1} + A^{-1} B F22 B^H A^{-1}

so extending ``A^{-1}`` by a block of ``K`` columns costs one ``K x K``
inversion plus products, and shrinking it back is

    A^{-1} = F11 - F12 F22^{-1} F12^H.

A user contributes ``K = 4`` columns.  Removing a user that is not last
works on the symmetrically permuted inverse, which puts its columns at the
end; that permutation is exact, so only the trailing formula does arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Hashable, Iterable, Sequence

import numpy as np

from . import linalg
from .channel import UserChannel, assemble_channel
from .decoder import DecoderState, check_capacity, rebuild
from .linalg import ctranspose, matmul

__all__ = [
    "BlockPartition",
    "partition",
    "extend_inverse",
    "deflate_inverse",
    "shrink_inverse",
    "partitioned_inverse",
    "partitioned_inverse_woodbury",
    "woodbury_inverse",
    "add_user",
    "add_users",
    "remove_user",
    "remove_users",
    "update_csi",
]


@dataclass(frozen=True)
class BlockPartition:
    F11: np.ndarray
    F12: np.ndarray
    F21: np.ndarray
    F22: np.ndarray

    def assemble(self) -> np.ndarray:
        return np.block([[self.F11, self.F12], [self.F21, self.F22]])


def partition(M, split: int) -> BlockPartition:
    """Split a square matrix so that ``F11`` is ``split x split``."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise linalg.DimensionError(f"expected a square matrix, got {M.shape}")
    if not 0 <= split <= M.shape[0]:
        raise ValueError(f"split {split} outside 0..{M.shape[0]}")
    s = split
    return BlockPartition(M[:s, :s], M[:s, s:], M[s:, :s], M[s:, s:])


# xxxxxxxxxxxxxxx Block identities xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def extend_inverse(Ainv, B, D) -> np.ndarray:
    """Inverse of ``[[A, B], [B^H, D]]`` from ``A^{-1}``.

    Only the ``K x K`` Schur complement ``D - B^H A^{-1} B`` is inverted.
    """
    Ainv = np.asarray(Ainv, dtype=complex)
    D = np.asarray(D, dtype=complex)
    n, k = Ainv.shape[0], D.shape[0]
    if n == 0:
        return linalg.hpd_inverse(D)
    AinvB = matmul(Ainv, B)
    S = linalg.sub(D, matmul(ctranspose(B), AinvB))
    F22 = linalg.hpd_inverse(linalg.hermitize(S))
    F12 = -matmul(AinvB, F22)
    # A^{-1} B F22 B^H A^{-1} = -F12 (A^{-1} B)^H since A^{-1} is Hermitian.
    F11 = linalg.sub(Ainv, matmul(F12, ctranspose(AinvB)))
    out = np.empty((n + k, n + k), dtype=complex)
    out[:n, :n] = F11
    out[:n, n:] = F12
    out[n:, :n] = F12.conj().T
    out[n:, n:] = F22
    return linalg.hermitize(out)


def deflate_inverse(Zinv, drop) -> np.ndarray:
    """Inverse of the matrix with rows/columns `drop` deleted, from `Zinv`.

    Equivalent to permuting `drop` to the end and applying the trailing
    update ``F11 - F12 F22^{-1} F12^H``; the blocks are gathered directly,
    which is the same data movement without the full permuted copy.
    """
    Zinv = np.asarray(Zinv, dtype=complex)
    n = Zinv.shape[0]
    drop = np.asarray(drop, dtype=np.intp)
    mask = np.ones(n, dtype=bool)
    mask[drop] = False
    keep = np.flatnonzero(mask)
    if drop.size == 0 or keep.size != n - drop.size:
        raise ValueError(f"need distinct indices to remove from dimension {n}")
    if keep.size == 0:
        return np.zeros((0, 0), dtype=complex)
    rows = Zinv.take(keep, axis=0)
    F11 = rows.take(keep, axis=1)
    F12 = rows.take(drop, axis=1)
    F22 = Zinv.take(drop, axis=0).take(drop, axis=1)
    X = matmul(F12, linalg.hpd_inverse(F22))
    F11 -= matmul(X, ctranspose(F12))
    linalg.record_ops(F11.size)
    return linalg.hermitize(F11)


def shrink_inverse(Zinv, k: int) -> np.ndarray:
    """Drop the trailing ``k`` rows/columns from the matrix whose inverse is `Zinv`."""
    n = np.shape(Zinv)[0]
    if not 0 < k <= n:
        raise ValueError(f"cannot remove {k} trailing indices from dimension {n}")
    return deflate_inverse(Zinv, np.arange(n - k, n))


def partitioned_inverse(A, B, D) -> BlockPartition:
    """Blocks of ``[[A, B], [B^H, D]]^{-1}`` from both Schur complements."""
    C = ctranspose(B)
    Dinv = linalg.hpd_inverse(D)
    Ainv = linalg.hpd_inverse(A)
    F11 = linalg.hpd_inverse(linalg.hermitize(A - B @ Dinv @ C))
    F22 = linalg.hpd_inverse(linalg.hermitize(D - C @ Ainv @ B))
    F12 = -F11 @ B @ Dinv
    F21 = -Dinv @ C @ F11
    return BlockPartition(F11, F12, F21, F22)


def partitioned_inverse_woodbury(A, B, D) -> BlockPartition:
    """Same blocks, reusing ``A^{-1}`` so only ``D``'s Schur complement is inverted."""
    C = ctranspose(B)
    Ainv = linalg.hpd_inverse(A)
    F22 = linalg.hpd_inverse(linalg.hermitize(D - C @ Ainv @ B))
    AinvB = Ainv @ B
    CAinv = C @ Ainv
    F11 = Ainv + AinvB @ F22 @ CAinv
    F12 = -AinvB @ F22
    F21 = -F22 @ CAinv
    return BlockPartition(F11, F12, F21, F22)


def woodbury_inverse(Ainv, B, D) -> np.ndarray:
    """``(A - B D^{-1} B^H)^{-1}`` given ``A^{-1}``:
    ``A^{-1} + A^{-1} B (D - B^H A^{-1} B)^{-1} B^H A^{-1}``."""
    Ainv = np.asarray(Ainv, dtype=complex)
    AinvB = Ainv @ B
    S = linalg.hermitize(D - ctranspose(B) @ AinvB)
    return Ainv + AinvB @ linalg.hpd_inverse(S) @ ctranspose(AinvB)


# xxxxxxxxxxxxxxx State updates xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def _finish(state: DecoderState, steps: int = 1, **changes) -> DecoderState:
    new = replace(state, updates_since_refresh=state.updates_since_refresh + steps, **changes)
    if new.refresh_every and new.updates_since_refresh >= new.refresh_every:
        new = rebuild(new)
    return new


def add_users(state: DecoderState, new_users: Sequence[UserChannel]) -> DecoderState:
    """Append users as one trailing block of ``4 * len(new_users)`` columns."""
    new_users = tuple(new_users)
    if not new_users:
        return state
    ids = [u.user_id for u in new_users]
    if len(set(ids)) != len(ids) or any(uid in state for uid in ids):
        raise ValueError(f"user ids {ids!r} collide with each other or the registry")
    Ga = assemble_channel(new_users, state.antennas)
    n, k = state.G.shape[1], Ga.shape[1]
    check_capacity(n + k, state.antennas, state.mode)

    D = linalg.gram(Ga)
    if state.mode.regularization:
        D[np.diag_indices_from(D)] += state.mode.regularization
    B = matmul(ctranspose(state.G), Ga) if n else np.zeros((0, k), dtype=complex)
    Zinv = extend_inverse(state.Zinv, B, D)
    G = np.hstack([state.G, Ga])
    return _finish(state, users=state.users + new_users, G=G, Zinv=Zinv)


def add_user(state: DecoderState, new_user: UserChannel) -> DecoderState:
    """Register `new_user` as the last user; O(M^2) instead of O(M^3)."""
    return add_users(state, (new_user,))


def remove_users(state: DecoderState, user_ids: Iterable[Hashable]) -> DecoderState:
    user_ids = list(user_ids)
    if not user_ids:
        return state
    if len(set(user_ids)) != len(user_ids):
        raise ValueError("duplicate user ids")
    positions = [state.index_of(uid) for uid in user_ids]
    cols = (4 * np.asarray(positions, dtype=np.intp)[:, None] + np.arange(4)).ravel()
    Zinv = deflate_inverse(state.Zinv, cols)
    gone = set(positions)
    users = tuple(u for i, u in enumerate(state.users) if i not in gone)
    keep = np.ones(state.G.shape[1], dtype=bool)
    keep[cols] = False
    return _finish(state, users=users, G=state.G[:, keep], Zinv=Zinv)


def remove_user(state: DecoderState, user_id: Hashable) -> DecoderState:
    """Unregister a user from any registry position."""
    return remove_users(state, (user_id,))


def update_csi(state: DecoderState, user_id: Hashable, new_channel: UserChannel) -> DecoderState:
    """Replace a user's channel: remove, then add back as the last user.

    `new_channel` keeps ``user_id`` as its identity whatever its own id is.
    """
    if new_channel.user_id != user_id:
        new_channel = UserChannel(user_id, new_channel.H, new_channel.beta)
    if new_channel.antennas != state.antennas:
        raise ValueError(f"new channel has {new_channel.antennas} antennas, expected {state.antennas}")
    # One refresh check for the pair, so a rebuild never lands between the halves.
    tmp = remove_user(replace(state, refresh_every=0), user_id)
    out = add_user(tmp, new_channel)
    return _finish(replace(out, refresh_every=state.refresh_every,
                           updates_since_refresh=state.updates_since_refresh), steps=2)
