import numpy as np
import pytest

from stbcfast import channel as ch
from stbcfast.codec import effective_channel

from conftest import make_users


def test_complex_normal_moments():
    z = ch.complex_normal(np.random.default_rng(0), 100_000)
    assert abs(z.mean()) < 0.02
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.02)
    assert np.var(z.real) == pytest.approx(0.5, abs=0.02)
    assert abs(np.mean(z.real * z.imag)) < 0.02


def test_streams_are_deterministic_and_distinct():
    a = ch.complex_normal(ch.channel_stream(7, 3), 10)
    b = ch.complex_normal(ch.channel_stream(7, 3), 10)
    c = ch.complex_normal(ch.channel_stream(7, 3, version=1), 10)
    d = ch.complex_normal(ch.noise_stream(7, 3), 10)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)
    assert not np.allclose(a, d)


def test_string_keys_are_stable():
    a = ch.complex_normal(ch.channel_stream(1, "alice"), 4)
    b = ch.complex_normal(ch.channel_stream(1, "alice"), 4)
    assert np.array_equal(a, b)
    assert not np.allclose(a, ch.complex_normal(ch.channel_stream(1, "bob"), 4))


def test_ones_policy():
    cfg = ch.SystemConfig()
    assert np.array_equal(ch.draw_betas(cfg, 5, np.random.default_rng(0)), np.ones(5))
    u = ch.draw_user_channel(cfg, np.random.default_rng(0), "x")
    assert u.beta == 1.0
    assert u.H.shape == (100, 2)


def test_lognormal_betas_sorted_and_normalized():
    cfg = ch.SystemConfig(beta_policy="lognormal", shadow_db=8.0)
    betas = ch.draw_betas(cfg, 20, np.random.default_rng(1))
    assert betas[0] == 1.0
    assert np.all(np.diff(betas) <= 0)
    assert np.all(betas > 0)


@pytest.mark.parametrize("kwargs", [{"antennas": 0}, {"rho": 0}, {"beta_policy": "pareto"}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ch.SystemConfig(**kwargs)


@pytest.mark.parametrize("beta", [0.0, -0.5, 1.5])
def test_user_channel_rejects_bad_beta(beta):
    with pytest.raises(ValueError):
        ch.UserChannel(0, np.ones((4, 2)), beta)


def test_user_channel_rejects_nan():
    H = np.ones((4, 2), dtype=complex)
    H[1, 1] = np.nan
    with pytest.raises(ValueError):
        ch.UserChannel(0, H)


def test_scaled_effective_channel():
    H = np.arange(8).reshape(4, 2) + 1j
    u = ch.UserChannel(0, H, 0.25)
    np.testing.assert_array_equal(u.H_eff, 0.25 * effective_channel(H))


def test_assemble_layout():
    users = make_users(3, antennas=8)
    G = ch.assemble_channel(users)
    assert G.shape == (16, 12)
    for m, u in enumerate(users):
        np.testing.assert_array_equal(G[:, 4 * m:4 * m + 4], u.H_eff)


def test_assemble_empty():
    assert ch.assemble_channel([], antennas=5).shape == (10, 0)
    with pytest.raises(ValueError):
        ch.assemble_channel([])


def test_assemble_inconsistent_antennas():
    users = make_users(1, antennas=8) + make_users(1, antennas=6, start=1)
    with pytest.raises(ValueError, match="antennas"):
        ch.assemble_channel(users)


def test_received_signal_noiseless():
    G = ch.assemble_channel(make_users(2, antennas=4))
    x = np.arange(8) * (1 - 1j)
    np.testing.assert_allclose(ch.received_signal(G, x, 8.0), 2.0 * G @ x, rtol=1e-15)
    assert np.array_equal(ch.received_signal(G, np.zeros(8), 8.0), np.zeros(8))


def test_received_signal_noise_variance():
    G = np.zeros((200, 4), dtype=complex)
    y = ch.received_signal(G, np.zeros((4, 500)), 10.0, np.random.default_rng(2))
    assert y.shape == (200, 500)
    assert np.mean(np.abs(y) ** 2) == pytest.approx(1.0, abs=0.02)


def test_received_signal_shape_check():
    with pytest.raises(ValueError):
        ch.received_signal(np.zeros((4, 8)), np.zeros(4), 1.0)


def test_db_to_linear():
    assert ch.db_to_linear(10) == pytest.approx(10.0)
    assert ch.db_to_linear(0) == 1.0
    assert ch.db_to_linear(-3) == pytest.approx(0.501187, rel=1e-5)
