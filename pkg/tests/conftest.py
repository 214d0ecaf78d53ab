import sys

import numpy as np
import pytest

from stbcfast import channel as ch


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_hpd(rng, n, extra=4):
    G = crandn(rng, n + extra, n)
    return G.conj().T @ G + 0.1 * np.eye(n)


def make_users(n_users, antennas=100, seed=0, start=0):
    cfg = ch.SystemConfig(antennas=antennas, seed=seed)
    return [ch.draw_user_channel(cfg, ch.channel_stream(seed, i), i)
            for i in range(start, start + n_users)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
