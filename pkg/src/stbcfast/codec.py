"""Two-antenna, two-slot space-time block code.

Each user sends four symbols ``x1..x4`` over two time slots::

    X = [[a (x1 + b x2),  gamma a (x3 + b x4)],
         [c (x3 + d x4),  c (x1 + d x2)      ]]

Row ``p`` of ``X`` is sent from antenna ``p``, column ``s`` in slot ``s``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CodeConstants",
    "Constellation",
    "coding_constants",
    "constellation",
    "qpsk",
    "qam16",
    "encode",
    "effective_channel",
    "vec",
    "detect_indices",
    "detect_symbols",
]


@dataclass(frozen=True)
class CodeConstants:
    a: complex
    b: complex
    c: complex
    d: complex
    gamma: complex


@functools.lru_cache(maxsize=None)
def coding_constants() -> CodeConstants:
    """Golden-ratio code constants.

    ``b`` and ``d`` are the two roots of ``t**2 = t + 1``.  With them the
    four per-symbol columns of the effective channel have unit energy and
    are orthogonal in expectation.
    """
    s5 = math.sqrt(5.0)
    b = (1.0 + s5) / 2.0
    d = (1.0 - s5) / 2.0
    a = complex(1.0, 1.0 - b) / s5
    c = complex(1.0, 1.0 - d) / s5
    return CodeConstants(a=a, b=complex(b), c=c, d=complex(d), gamma=1j)


def encode(x, k: CodeConstants | None = None) -> np.ndarray:
    """Map four symbols to the 2x2 transmit block."""
    k = coding_constants() if k is None else k
    x = np.asarray(x, dtype=complex)
    if x.shape != (4,):
        raise ValueError(f"expected 4 symbols, got shape {x.shape}")
    x1, x2, x3, x4 = x
    return np.array(
        [
            [k.a * (x1 + k.b * x2), k.gamma * k.a * (x3 + k.b * x4)],
            [k.c * (x3 + k.d * x4), k.c * (x1 + k.d * x2)],
        ]
    )


def vec(Y) -> np.ndarray:
    """Stack the columns (time slots) of ``Y``."""
    return np.asarray(Y).reshape(-1, order="F")


def effective_channel(H, k: CodeConstants | None = None) -> np.ndarray:
    """Effective channel ``(2N, 4)`` such that ``vec(H @ encode(x)) == Hhat @ x``.

    Parameters
    ----------
    H : (N, 2) array_like
        Small-scale fading from the two user antennas to the ``N`` receive
        antennas.
    """
    k = coding_constants() if k is None else k
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[1] != 2:
        raise ValueError(f"channel must have shape (N, 2), got {H.shape}")
    h1, h2 = H[:, 0], H[:, 1]
    a, b, c, d, g = k.a, k.b, k.c, k.d, k.gamma
    return np.column_stack(
        [
            np.concatenate([a * h1, c * h2]),
            np.concatenate([a * b * h1, c * d * h2]),
            np.concatenate([c * h2, g * a * h1]),
            np.concatenate([c * d * h2, g * a * b * h1]),
        ]
    )


# xxxxxxxxxxxxxxx Constellations xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
@dataclass(frozen=True, eq=False)
class Constellation:
    """Unit-average-energy constellation with Gray bit labels.

    ``labels[i]`` is the integer bit label of ``points[i]``.
    """

    kind: str
    points: np.ndarray
    labels: np.ndarray

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(len(self.points)))

    def __len__(self) -> int:
        return len(self.points)


def _gray(n: int) -> int:
    return n ^ (n >> 1)


def qpsk() -> Constellation:
    # Bit 1 on I, bit 0 on Q; adjacent points differ in one bit.
    labels = np.arange(4)
    i_sign = np.where(labels & 0b10, -1.0, 1.0)
    q_sign = np.where(labels & 0b01, -1.0, 1.0)
    points = (i_sign + 1j * q_sign) / np.sqrt(2.0)
    return Constellation("qpsk", points, labels)


def qam16() -> Constellation:
    levels = np.array([-3.0, -1.0, 1.0, 3.0])
    points, labels = [], []
    for i in range(4):
        for q in range(4):
            points.append(levels[i] + 1j * levels[q])
            labels.append((_gray(i) << 2) | _gray(q))
    points = np.array(points) / np.sqrt(10.0)
    return Constellation("16qam", points, np.array(labels))


_CONSTELLATIONS = {"qpsk": qpsk, "16qam": qam16}


def constellation(kind: str) -> Constellation:
    try:
        return _CONSTELLATIONS[kind.lower()]()
    except KeyError:
        raise ValueError(f"unknown constellation {kind!r}; choose from {sorted(_CONSTELLATIONS)}")


# xxxxxxxxxxxxxxx Detection xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def detect_indices(filtered, gains, cons: Constellation, rho: float) -> np.ndarray:
    """Per-symbol minimum-distance decisions.

    For each stream ``p`` pick the constellation index minimizing
    ``|filtered[p] - sqrt(rho/2) * gains[p] * point|``.  Ties go to the
    lowest index.  `filtered` may carry extra trailing axes (one per block);
    `gains` broadcasts against it.
    """
    if len(cons) == 0:
        raise ValueError("empty constellation")
    filtered = np.asarray(filtered, dtype=complex)
    gains = np.asarray(gains, dtype=complex)
    if gains.ndim < filtered.ndim:
        gains = gains.reshape(gains.shape + (1,) * (filtered.ndim - gains.ndim))
    scaled = np.sqrt(rho / 2.0) * gains
    dist = np.abs(filtered[..., None] - scaled[..., None] * cons.points)
    return np.argmin(dist, axis=-1)


def detect_symbols(filtered, gains, cons: Constellation, rho: float) -> np.ndarray:
    """Decisions as constellation points, reshaped to ``(users, 4, ...)``."""
    idx = detect_indices(filtered, gains, cons, rho)
    return cons.points[idx].reshape((-1, 4) + idx.shape[1:])
