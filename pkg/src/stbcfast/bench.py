"""Wall-clock comparison of fast updates against direct rebuilds."""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass
from typing import Callable, Sequence

from . import channel as ch
from . import fast_update as fu
from .decoder import DecoderMode, new_state, rebuild

__all__ = ["BenchRow", "time_call", "time_pair", "run_bench", "write_csv"]


@dataclass(frozen=True)
class BenchRow:
    M: int
    fast_ns: float
    direct_ns: float

    @property
    def speedup(self) -> float:
        return self.direct_ns / self.fast_ns


def _batch_size(fn: Callable[[], object], min_batch_ns: int) -> int:
    # Warm-up call doubles as calibration.
    t0 = time.perf_counter_ns()
    fn()
    once = max(time.perf_counter_ns() - t0, 1)
    return max(1, -(-min_batch_ns // once))


def _batch(fn: Callable[[], object], number: int) -> float:
    t0 = time.perf_counter_ns()
    for _ in range(number):
        fn()
    return (time.perf_counter_ns() - t0) / number


def time_call(fn: Callable[[], object], repetitions: int = 5, min_batch_ns: int = 2_000_000) -> float:
    """Median per-call time in ns over `repetitions` batches.

    Batch size is calibrated on a warm-up run so each batch lasts at least
    `min_batch_ns`.
    """
    if repetitions < 3:
        raise ValueError("repetitions must be >= 3")
    number = _batch_size(fn, min_batch_ns)
    return statistics.median(_batch(fn, number) for _ in range(repetitions))


def time_pair(
    first: Callable[[], object],
    second: Callable[[], object],
    repetitions: int = 5,
    min_batch_ns: int = 2_000_000,
) -> tuple[float, float]:
    """Median per-call times of two callables, with their batches interleaved.

    Alternating keeps slow drifts in machine load from landing on one side
    of the comparison only.
    """
    if repetitions < 3:
        raise ValueError("repetitions must be >= 3")
    n1, n2 = _batch_size(first, min_batch_ns), _batch_size(second, min_batch_ns)
    s1, s2 = [], []
    for _ in range(repetitions):
        s1.append(_batch(first, n1))
        s2.append(_batch(second, n2))
    return statistics.median(s1), statistics.median(s2)


def run_bench(
    antennas: int = 100,
    M_values: Sequence[int] = (10, 16, 24, 30),
    scenario: str = "remove",
    repetitions: int = 5,
    mode: str = "zf",
    rho: float = 10.0,
    seed: int = 0,
    min_batch_ns: int = 2_000_000,
) -> list[BenchRow]:
    """Time one event on an ``M``-user state against rebuilding its result.

    Removal and CSI update act on the middle registry slot so the
    permutation path is included.
    """
    system = ch.SystemConfig(antennas=antennas, rho=rho, seed=seed)
    dmode = DecoderMode(mode, rho)
    rows = []
    for M in M_values:
        users = [ch.draw_user_channel(system, ch.channel_stream(seed, "bench", i), i) for i in range(M)]
        extra = ch.draw_user_channel(system, ch.channel_stream(seed, "bench", M), M)
        state = new_state(antennas, dmode, users, refresh_every=0)
        if scenario == "add":
            fast = lambda: fu.add_user(state, extra)
        elif scenario == "remove":
            fast = lambda: fu.remove_user(state, M // 2)
        elif scenario == "csi_update":
            fast = lambda: fu.update_csi(state, M // 2, extra)
        else:
            raise ValueError(f"unknown scenario {scenario!r}")
        target = fast()
        fast_ns, direct_ns = time_pair(fast, lambda: rebuild(target), repetitions, min_batch_ns)
        rows.append(BenchRow(M, fast_ns, direct_ns))
    return rows


def write_csv(rows: Sequence[BenchRow], path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["M", "fast_ns", "direct_ns", "speedup"])
    for r in rows:
        w.writerow([r.M, f"{r.fast_ns:.0f}", f"{r.direct_ns:.0f}", f"{r.speedup:.3f}"])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
