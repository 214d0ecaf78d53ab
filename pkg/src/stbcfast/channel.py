"""Rayleigh-fading uplink channels and received-signal synthesis.

Random streams are Philox generators keyed by ``(seed, purpose, key...)``
so a user's channel does not depend on when, or next to whom, it is drawn.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .codec import effective_channel

__all__ = [
    "SystemConfig",
    "UserChannel",
    "stream",
    "channel_stream",
    "noise_stream",
    "complex_normal",
    "draw_betas",
    "draw_user_channel",
    "assemble_channel",
    "received_signal",
    "db_to_linear",
]

# Stream purposes; part of the seed -> output mapping, do not renumber.
CHANNEL, NOISE, SYMBOLS, BETA, HISTORY = 1, 2, 3, 4, 5


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Cell-level parameters.

    `beta_policy` is ``"ones"`` (every large-scale gain is 1) or
    ``"lognormal"`` (shadowing with `shadow_db` standard deviation, sorted
    descending and scaled so the strongest user has gain 1).
    """

    antennas: int = 100
    rho: float = 10.0
    seed: int = 0
    beta_policy: str = "ones"
    shadow_db: float = 8.0

    def __post_init__(self):
        if self.antennas < 1:
            raise ValueError("antennas must be >= 1")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.beta_policy not in ("ones", "lognormal"):
            raise ValueError(f"unknown beta policy {self.beta_policy!r}")


@dataclass(frozen=True, eq=False)
class UserChannel:
    """One user's channel and its cached scaled effective channel."""

    user_id: Hashable
    H: np.ndarray
    beta: float = 1.0
    H_eff: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        H = np.asarray(self.H, dtype=complex)
        if not (0.0 < self.beta <= 1.0):
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if not np.all(np.isfinite(H)):
            raise ValueError("channel contains non-finite entries")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "H_eff", self.beta * effective_channel(H))

    @property
    def antennas(self) -> int:
        return self.H.shape[0]


# xxxxxxxxxxxxxxx Random streams xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def _key_int(key) -> int:
    if isinstance(key, (int, np.integer)) and key >= 0:
        return int(key)
    digest = hashlib.sha256(repr(key).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def stream(seed: int, purpose: int, *keys) -> np.random.Generator:
    """Independent generator for ``(seed, purpose, *keys)``."""
    ss = np.random.SeedSequence(_key_int(seed), spawn_key=(purpose, *map(_key_int, keys)))
    return np.random.Generator(np.random.Philox(ss))


def channel_stream(seed: int, user_id, version: int = 0) -> np.random.Generator:
    return stream(seed, CHANNEL, user_id, version)


def noise_stream(seed: int, *keys) -> np.random.Generator:
    return stream(seed, NOISE, *keys)


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) samples: real and imaginary parts i.i.d. N(0, 1/2)."""
    z = rng.standard_normal(tuple(np.atleast_1d(shape)) + (2,)) * np.sqrt(0.5)
    return z[..., 0] + 1j * z[..., 1]


# xxxxxxxxxxxxxxx Channels xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def draw_betas(cfg: SystemConfig, count: int, rng: np.random.Generator) -> np.ndarray:
    """Large-scale gains for `count` users, descending with the first equal to 1."""
    if cfg.beta_policy == "ones" or count == 0:
        return np.ones(count)
    shadow = 10.0 ** (cfg.shadow_db * rng.standard_normal(count) / 10.0)
    shadow = np.sort(shadow)[::-1]
    return shadow / shadow[0]


def draw_user_channel(
    cfg: SystemConfig,
    rng: np.random.Generator,
    user_id: Hashable = None,
    beta: float | None = None,
) -> UserChannel:
    """Draw an ``(N, 2)`` Rayleigh channel.

    Without an explicit `beta` the gain follows ``cfg.beta_policy``; a single
    log-normal draw normalizes to 1, so pass population gains from
    :func:`draw_betas` when users should differ.
    """
    H = complex_normal(rng, (cfg.antennas, 2))
    if beta is None:
        beta = float(draw_betas(cfg, 1, rng)[0])
    return UserChannel(user_id, H, beta)


def assemble_channel(users: Sequence[UserChannel], antennas: int | None = None) -> np.ndarray:
    """Stack the users' scaled effective channels side by side, ``(2N, 4M)``."""
    if not users:
        if antennas is None:
            raise ValueError("antennas is required for an empty user list")
        return np.zeros((2 * antennas, 0), dtype=complex)
    n = users[0].antennas if antennas is None else antennas
    for u in users:
        if u.antennas != n:
            raise ValueError(
                f"user {u.user_id!r} has {u.antennas} antennas at the BS, expected {n}"
            )
    return np.hstack([u.H_eff for u in users])


def received_signal(G, x, rho: float, rng: np.random.Generator | None = None) -> np.ndarray:
    """``sqrt(rho/2) G x + w`` with ``w ~ CN(0, I)``; noiseless when `rng` is None.

    `x` may be a vector of ``4M`` symbols or a ``(4M, B)`` batch of blocks.
    """
    G = np.asarray(G, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if G.ndim != 2 or x.shape[0] != G.shape[1]:
        raise ValueError(f"cannot apply channel {G.shape} to symbols {x.shape}")
    y = np.sqrt(rho / 2.0) * (G @ x)
    if rng is not None:
        y = y + complex_normal(rng, y.shape)
    return y
