"""ZF / MMSE linear decoding around a maintained inverse of the decode matrix."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Hashable, Sequence

import numpy as np

from . import linalg
from .channel import UserChannel, assemble_channel
from .codec import Constellation, detect_indices

__all__ = [
    "CapacityError",
    "DecoderMode",
    "DecoderState",
    "build_z",
    "new_state",
    "rebuild",
    "filter_matrix",
    "decode_indices",
    "filter_and_decode",
    "inverse_residual",
]

DEFAULT_REFRESH_EVERY = 64


class CapacityError(ValueError):
    """ZF needs ``4M <= 2N``; more streams make the Gram matrix singular."""


@dataclass(frozen=True)
class DecoderMode:
    variant: str = "zf"
    rho: float = 10.0

    def __post_init__(self):
        variant = self.variant.lower()
        if variant not in ("zf", "mmse"):
            raise ValueError(f"unknown decoder variant {self.variant!r}")
        object.__setattr__(self, "variant", variant)
        if not self.rho > 0:
            raise ValueError("rho must be positive")

    @property
    def regularization(self) -> float:
        """Diagonal loading of the decode matrix (0 for ZF)."""
        return 2.0 / self.rho if self.variant == "mmse" else 0.0


def check_capacity(streams: int, antennas: int, mode: DecoderMode) -> None:
    if mode.variant == "zf" and streams > 2 * antennas:
        raise CapacityError(
            f"ZF cannot separate {streams} streams with {antennas} antennas "
            f"(need 4M <= 2N, i.e. at most {antennas // 2} users)"
        )


def build_z(G, mode: DecoderMode) -> np.ndarray:
    """``G^H G`` for ZF, ``(2/rho) I + G^H G`` for MMSE."""
    G = np.asarray(G, dtype=complex)
    check_capacity(G.shape[1], G.shape[0] // 2, mode)
    Z = linalg.gram(G)
    if mode.regularization:
        Z[np.diag_indices_from(Z)] += mode.regularization
    return Z


@dataclass(frozen=True, eq=False)
class DecoderState:
    """Registered users, their stacked channel and the maintained ``Z^{-1}``.

    States are treated as values: the update functions return new states.
    ``refresh_every`` forces a from-scratch rebuild after that many fast
    updates (0 disables it).
    """

    antennas: int
    mode: DecoderMode
    users: tuple[UserChannel, ...] = ()
    G: np.ndarray = None
    Zinv: np.ndarray = None
    updates_since_refresh: int = 0
    refresh_every: int = DEFAULT_REFRESH_EVERY

    def __post_init__(self):
        if self.G is None:
            object.__setattr__(self, "G", np.zeros((2 * self.antennas, 0), dtype=complex))
        if self.Zinv is None:
            object.__setattr__(self, "Zinv", np.zeros((0, 0), dtype=complex))
        if self.G.shape[1] != 4 * len(self.users) or self.Zinv.shape != (self.G.shape[1],) * 2:
            raise linalg.DimensionError(
                f"{len(self.users)} users but G is {self.G.shape} and Zinv is {self.Zinv.shape}"
            )

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def user_ids(self) -> list:
        return [u.user_id for u in self.users]

    def index_of(self, user_id: Hashable) -> int:
        for i, u in enumerate(self.users):
            if u.user_id == user_id:
                return i
        raise KeyError(f"user {user_id!r} is not registered")

    def __contains__(self, user_id) -> bool:
        return any(u.user_id == user_id for u in self.users)

    def z(self) -> np.ndarray:
        return build_z(self.G, self.mode)


def new_state(
    antennas: int,
    mode: DecoderMode,
    users: Sequence[UserChannel] = (),
    refresh_every: int = DEFAULT_REFRESH_EVERY,
) -> DecoderState:
    """Build a state directly (Gram plus full inversion)."""
    users = tuple(users)
    ids = [u.user_id for u in users]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate user ids")
    G = assemble_channel(users, antennas)
    Zinv = linalg.hpd_inverse(build_z(G, mode))
    return DecoderState(antennas, mode, users, G, Zinv, 0, refresh_every)


def rebuild(state: DecoderState) -> DecoderState:
    """Recompute ``Z^{-1}`` from scratch for the current channel."""
    Zinv = linalg.hpd_inverse(build_z(state.G, state.mode))
    return replace(state, Zinv=Zinv, updates_since_refresh=0)


def filter_matrix(state: DecoderState) -> np.ndarray:
    """Linear filter ``Q = Z^{-1} G^H``, formed on demand."""
    return linalg.matmul(state.Zinv, linalg.ctranspose(state.G))


def decode_indices(state: DecoderState, y, cons: Constellation) -> np.ndarray:
    """Constellation indices of the decisions, shape ``(M, 4)`` or ``(M, 4, B)``.

    `y` is the vectorized received block ``(2N,)`` or a batch ``(2N, B)``.
    Rows follow the state's registry order.
    """
    y = np.asarray(y, dtype=complex)
    if y.shape[0] != state.G.shape[0]:
        raise linalg.DimensionError(f"received vector has {y.shape[0]} rows, expected {state.G.shape[0]}")
    Q = filter_matrix(state)
    filtered = Q @ y
    gains = np.einsum("ij,ji->i", Q, state.G)
    idx = detect_indices(filtered, gains, cons, state.mode.rho)
    return idx.reshape((state.num_users, 4) + idx.shape[1:])


def filter_and_decode(state: DecoderState, y, cons: Constellation) -> np.ndarray:
    """Symbol decisions per user in registry order, shape ``(M, 4[, B])``."""
    return cons.points[decode_indices(state, y, cons)]


def inverse_residual(state: DecoderState) -> float:
    """``||Z Zinv - I||_F`` for the current channel."""
    n = state.Zinv.shape[0]
    if n == 0:
        return 0.0
    return float(np.linalg.norm(state.z() @ state.Zinv - np.eye(n)))
