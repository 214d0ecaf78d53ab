"""Monte-Carlo symbol/bit error rate of the linear STBC receiver."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import channel as ch
from . import fast_update as fu
from .codec import Constellation, constellation
from .decoder import DecoderMode, DecoderState, decode_indices, new_state

__all__ = ["BerPoint", "history_state", "run_ber", "write_csv"]


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    errors: int
    total: int

    @property
    def ber(self) -> float:
        return self.errors / self.total if self.total else 0.0


def history_state(
    antennas: int,
    mode: DecoderMode,
    users: Sequence[ch.UserChannel],
    rng: np.random.Generator,
    system: ch.SystemConfig,
) -> DecoderState:
    """Reach the registry `users` through a random event history.

    Transient users come and go, some targets first arrive with a decoy
    channel that is then replaced.  The final registry holds exactly
    `users` (order may differ) and its inverse was never built directly.
    """
    limit = antennas // 2 if mode.variant == "zf" else None
    state = DecoderState(antennas, mode)
    ghosts = []
    for left, user in zip(range(len(users), 0, -1), users):
        room = limit is None or state.num_users + left + 1 <= limit
        if room and rng.random() < 0.5:
            ghost = ch.draw_user_channel(system, rng, ("ghost", len(ghosts)))
            state = fu.add_user(state, ghost)
            ghosts.append(ghost.user_id)
        if rng.random() < 0.3:
            decoy = ch.draw_user_channel(system, rng, user.user_id)
            state = fu.add_user(state, decoy)
            state = fu.update_csi(state, user.user_id, user)
        else:
            state = fu.add_user(state, user)
    for i in rng.permutation(len(ghosts)):
        state = fu.remove_user(state, ghosts[i])
    return state


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.unpackbits(a.astype(np.uint8)[..., None], axis=-1).sum(axis=-1)


def run_ber(
    antennas: int = 100,
    users: int = 10,
    mode: str = "zf",
    cons: str | Constellation = "qpsk",
    snr_db: Sequence[float] = (0.0, 5.0, 10.0, 15.0, 20.0),
    trials: int = 100,
    blocks: int = 10,
    seed: int = 0,
    fast_state: bool = False,
    bits: bool = False,
    noiseless: bool = False,
) -> list[BerPoint]:
    """Error rates over `trials` channel draws with `blocks` code blocks each.

    Channels, symbols and noise depend only on ``(seed, trial)`` and the SNR
    index, so fresh and ``fast_state`` runs see identical received signals.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cons = constellation(cons) if isinstance(cons, str) else cons
    system = ch.SystemConfig(antennas=antennas, seed=seed)
    ids = list(range(users))
    out = []
    for si, snr in enumerate(snr_db):
        rho = ch.db_to_linear(snr)
        dmode = DecoderMode(mode, rho)
        errors = total = 0
        for t in range(trials):
            chans = [ch.draw_user_channel(system, ch.stream(seed, ch.CHANNEL, "ber", t, u), u)
                     for u in ids]
            if fast_state:
                state = history_state(antennas, dmode, chans, ch.stream(seed, ch.HISTORY, t, si), system)
                G = ch.assemble_channel(chans, antennas)
            else:
                state = new_state(antennas, dmode, chans)
                G = state.G
            sent = ch.stream(seed, ch.SYMBOLS, "ber", t).integers(len(cons), size=(users, 4, blocks))
            noise = None if noiseless else ch.noise_stream(seed, "ber", si, t)
            y = ch.received_signal(G, cons.points[sent].reshape(4 * users, blocks), rho, noise)
            got = decode_indices(state, y, cons)
            got = got[[state.index_of(u) for u in ids]]
            if bits:
                errors += int(_popcount(cons.labels[sent] ^ cons.labels[got]).sum())
                total += sent.size * cons.bits_per_symbol
            else:
                errors += int(np.count_nonzero(sent != got))
                total += sent.size
        out.append(BerPoint(float(snr), errors, total))
    return out


def write_csv(points: Sequence[BerPoint], path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["snr_db", "errors", "total", "ber"])
    for p in points:
        w.writerow([f"{p.snr_db:g}", p.errors, p.total, f"{p.ber:.6e}"])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
