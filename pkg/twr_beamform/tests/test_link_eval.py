"""
Tests for two-phase simulation, spectral efficiency, relay normalization and trials.
"""
import numpy as np
import pytest

from twr_beamform.channel.channel_model import generate_channel_set
from twr_beamform.designers.fd_relay import design_fd_relay, normalize_relay_gain
from twr_beamform.designers.had_relay import compose_had, had_hosvd, stack_fd_tensor
from twr_beamform.designers.terminal import design_beams, effective_channel, noise_covariance
from twr_beamform.models.design import TerminalBeams
from twr_beamform.models.experiment import ExperimentConfig
from twr_beamform.services import link_eval
from twr_beamform.services.link_eval import (
    design_terminal_beams,
    design_terminal_links,
    evaluate_relay,
    isotropic_covariance,
    normalize_two_pass,
    precoded_covariance,
    run_trial,
    simulate_two_phase,
    snr_to_noise,
    spectral_efficiency_closed,
    spectral_efficiency_general,
)
from twr_beamform.utils.errors import NumericalError


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def small_channel(seed=0, M_rs=6, M=2, K=2, sigma2=0.1):
    return generate_channel_set(
        np.random.default_rng(seed), M_rs, M, M, K, L=3, D=2, sigma2_rs=sigma2, sigma2_ue=sigma2
    )


def small_config(**overrides):
    values = dict(m_rs=8, m1=2, m2=2, k=2, ns=1, n_rs=4, l=3, d=2, r=2, trials=1, snr_db_grid=[10.0])
    values.update(overrides)
    return ExperimentConfig(**values)


def normalized_relay(ch, k=0, Ns=2):
    G = design_fd_relay(ch, "anomax", Ns).G[k]
    G_n, _ = normalize_relay_gain(G, isotropic_covariance(ch, k, 1.0), 1.0)
    return G_n


def test_snr_to_noise():
    assert snr_to_noise(0) == pytest.approx(1.0)
    assert snr_to_noise(10) == pytest.approx(0.1)
    assert snr_to_noise(-20) == pytest.approx(100.0)


# ---------------------------------------------------------------------------
# Two-phase simulation
# ---------------------------------------------------------------------------

def test_self_interference_cancels_exactly():
    ch = small_channel(1)
    relay = [normalized_relay(ch, k) for k in range(ch.K)]
    beams = design_terminal_beams(ch, relay, 2, 1.0)
    for k in range(ch.K):
        for sig in simulate_two_phase(ch, relay[k], beams, np.random.default_rng(2), k):
            assert np.allclose(sig.z - (sig.y_ds + sig.noise), 0, atol=1e-12)


def test_zero_relay_leaves_terminal_noise_only():
    ch = small_channel(3)
    beams = TerminalBeams.empty(ch.K)
    eye = np.eye(2, dtype=np.complex128)
    for k in range(ch.K):
        for l in range(2):
            beams.F[l][k] = eye
            beams.W[l][k] = eye
    for sig in simulate_two_phase(ch, np.zeros((6, 6)), beams, np.random.default_rng(4), 0):
        assert np.allclose(sig.y_ds, 0)
        assert np.allclose(sig.y_si, 0)
        assert np.allclose(sig.z, sig.noise)


def test_noiseless_link_is_diagonal():
    ch = small_channel(5)
    relay = [normalized_relay(ch, k) for k in range(ch.K)]
    beams = design_terminal_beams(ch, relay, 2, 1.0)
    clean = ch.with_noise(0.0, 0.0)
    received = simulate_two_phase(clean, relay[1], beams, np.random.default_rng(6), 1)
    for l, sig in enumerate(received):
        gains = beams.lambda_eff[l][1] * np.sqrt(beams.p[l][1])
        assert np.allclose(sig.noise, 0)
        assert np.allclose(sig.z, gains * sig.s_partner, atol=1e-10)


def test_design_terminal_beams_shapes():
    ch = generate_channel_set(np.random.default_rng(7), 6, 2, 3, K=2, L=3, D=2)
    relay = [normalized_relay(ch, k, Ns=2) for k in range(ch.K)]
    beams = design_terminal_beams(ch, relay, 2, 1.0)
    for k in range(ch.K):
        assert beams.F[0][k].shape == (2, 2)
        assert beams.W[0][k].shape == (2, 2)
        assert beams.F[1][k].shape == (3, 2)
        assert beams.W[1][k].shape == (3, 2)
        for l in range(2):
            assert np.linalg.norm(beams.F[l][k]) ** 2 == pytest.approx(1.0, rel=1e-9)


# ---------------------------------------------------------------------------
# Spectral efficiency
# ---------------------------------------------------------------------------

def test_closed_form_cases():
    assert spectral_efficiency_closed([1.0], [1.0]) == pytest.approx(0.5)
    assert spectral_efficiency_closed([3.0, 2.0], [0.0, 0.0]) == 0.0
    assert spectral_efficiency_closed([1.0], [1.0], half_prelog=False) == pytest.approx(1.0)


def test_general_zero_channel():
    rng = np.random.default_rng(8)
    F, W = crandn(rng, 2, 2), crandn(rng, 2, 2)
    assert spectral_efficiency_general(np.zeros((2, 2)), F, W, np.eye(2)) == 0.0


def test_general_matches_closed_form_for_designed_beams():
    rng = np.random.default_rng(9)
    H_rx, H_tx, G = crandn(rng, 5, 3), crandn(rng, 5, 3), crandn(rng, 5, 5)
    H_bar = effective_channel(H_rx, G, H_tx)
    Phi = noise_covariance(H_rx, G, 0.3, 0.2)
    link = design_beams(H_bar, Phi, 2, 1.0)
    general = spectral_efficiency_general(H_bar, link.F, link.W, Phi)
    assert general == pytest.approx(spectral_efficiency_closed(link.lambda_eff, link.p), rel=1e-9)


def test_general_properties():
    rng = np.random.default_rng(10)
    H_bar, F, W = crandn(rng, 3, 3), crandn(rng, 3, 2), crandn(rng, 3, 2)
    Phi = np.eye(3) * 0.5
    base = spectral_efficiency_general(H_bar, F, W, Phi)
    assert base > 0
    assert spectral_efficiency_general(H_bar, 2 * F, W, Phi) >= base

    Q, _ = np.linalg.qr(crandn(rng, 2, 2))
    assert spectral_efficiency_general(H_bar, F @ Q, W, Phi) == pytest.approx(base, rel=1e-10)
    assert spectral_efficiency_general(H_bar, F, W, Phi, half_prelog=False) == pytest.approx(2 * base)


def test_general_improves_with_less_terminal_noise():
    rng = np.random.default_rng(11)
    H_rx, H_tx, G = crandn(rng, 4, 2), crandn(rng, 4, 2), crandn(rng, 4, 4)
    H_bar = effective_channel(H_rx, G, H_tx)
    F, W = crandn(rng, 2, 2), crandn(rng, 2, 2)
    rates = [
        spectral_efficiency_general(H_bar, F, W, noise_covariance(H_rx, G, 0.1, s_ue))
        for s_ue in (1.0, 0.1, 0.01)
    ]
    assert rates[0] < rates[1] < rates[2]


def test_general_rejects_singular_decoder():
    with pytest.raises(NumericalError):
        spectral_efficiency_general(np.eye(2), np.eye(2), np.zeros((2, 2)), np.eye(2))


# ---------------------------------------------------------------------------
# Relay normalization and evaluation
# ---------------------------------------------------------------------------

def test_two_pass_meets_power_under_first_pass_precoders():
    ch = small_channel(12)
    G = design_fd_relay(ch, "err", 2, 2).G[0]
    P_rs, P_ue = 2.0, 1.0
    G2, beta2, links = normalize_two_pass(ch, G, 0, 2, P_rs, P_ue)
    assert np.allclose(G2, beta2 * G)
    assert len(links) == 2

    G1, _ = normalize_relay_gain(G, isotropic_covariance(ch, 0, P_ue), P_rs)
    first = design_terminal_links(ch, G1, 0, 2, P_ue)
    Cx = precoded_covariance(ch, 0, [first[1].F, first[0].F])
    assert np.real(np.trace(G2 @ Cx @ G2.conj().T)) == pytest.approx(P_rs, rel=1e-9)


def test_covariances():
    ch = small_channel(13)
    Cx = isotropic_covariance(ch, 0, 2.0)
    assert np.allclose(Cx, Cx.conj().T)
    signal = isotropic_covariance(ch, 0, 2.0, include_noise=False)
    assert np.allclose(Cx - signal, ch.sigma2_rs * np.eye(ch.M_rs))
    F_iso = [np.sqrt(2.0 / 2) * np.eye(2), np.sqrt(2.0 / 2) * np.eye(2)]
    assert np.allclose(precoded_covariance(ch, 0, F_iso), Cx)


def test_unconstrained_full_width_hybrid_matches_fully_digital():
    config = small_config(m_rs=4, ns=2, n_rs=4)
    ch = small_channel(14, M_rs=4).with_noise(0.05, 0.05)
    fd = design_fd_relay(ch, "err", 2, 2)
    had = had_hosvd(stack_fd_tensor(fd.G), 4, project=False)
    relay_had = [compose_had(had, k) for k in range(had.K)]
    assert evaluate_relay(ch, relay_had, config) == pytest.approx(evaluate_relay(ch, fd.G, config), rel=1e-6)


# ---------------------------------------------------------------------------
# Trials
# ---------------------------------------------------------------------------

def test_run_trial_is_deterministic():
    config = small_config()
    first = run_trial(config, 3)
    assert first == run_trial(config, 3)
    assert set(first) == {"anomax", "rr", "err", "had_hosvd", "had_altmax"}
    for row in first.values():
        assert len(row) == 1
        assert np.isfinite(row[0]) and row[0] > 0


def test_run_trial_rate_falls_with_snr():
    config = small_config(methods=["anomax", "had_altmax"], snr_db_grid=[-10.0, -30.0, -50.0])
    for row in run_trial(config, 4).values():
        assert row[0] > row[1] > row[2] >= 0


def test_run_trial_records_nan_for_failed_design(monkeypatch):
    real = link_eval.design_fd_relay

    def failing(ch, method, Ns, R=2):
        if method == "rr":
            raise RuntimeError("forced failure")
        return real(ch, method, Ns, R)

    monkeypatch.setattr(link_eval, "design_fd_relay", failing)
    outcome = run_trial(small_config(methods=["anomax", "rr"]), 5)
    assert np.isnan(outcome["rr"][0])
    assert np.isfinite(outcome["anomax"][0])


def test_single_stream_designs_agree():
    config = small_config(methods=["anomax", "rr", "err"], k=1, snr_db_grid=[20.0])
    rates = {m: [] for m in config.methods}
    for seed in range(8):
        for method, row in run_trial(config, seed).items():
            rates[method].append(row[0])
    reference = np.mean(rates["anomax"])
    for method in ("rr", "err"):
        assert np.mean(rates[method]) == pytest.approx(reference, rel=0.25)
