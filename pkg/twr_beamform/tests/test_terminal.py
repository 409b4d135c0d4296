"""
Tests for mobile-station effective channels, whitening, water-filling and beams.
"""
import numpy as np
import pytest

from twr_beamform.designers.terminal import (
    design_beams,
    effective_channel,
    noise_covariance,
    water_fill,
    whitener,
)
from twr_beamform.utils.errors import DegenerateDesignError, DimensionError, NumericalError
from twr_beamform.utils.tensor_core import kron, svd, vec


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_pd(rng, M):
    X = crandn(rng, M, M)
    return X @ X.conj().T + 0.5 * np.eye(M)


def test_effective_channel_cases():
    rng = np.random.default_rng(0)
    H_rx, H_tx = crandn(rng, 5, 2), crandn(rng, 5, 3)
    assert np.allclose(effective_channel(H_rx, np.eye(5), H_tx), H_rx.T @ H_tx)
    assert np.allclose(effective_channel(H_rx, np.zeros((5, 5)), H_tx), 0)

    G = crandn(rng, 5, 5)
    H_bar = effective_channel(H_rx, G, H_tx)
    assert H_bar.shape == (2, 3)
    assert np.allclose(vec(H_bar), kron(H_tx, H_rx).T @ vec(G), atol=1e-12)


def test_effective_channel_dimension_mismatch():
    rng = np.random.default_rng(1)
    with pytest.raises(DimensionError):
        effective_channel(crandn(rng, 5, 2), crandn(rng, 4, 4), crandn(rng, 5, 2))


def test_noise_covariance_cases():
    rng = np.random.default_rng(2)
    H = crandn(rng, 6, 3)
    assert np.allclose(noise_covariance(H, np.zeros((6, 6)), 0.3, 0.7), 0.7 * np.eye(3))
    assert np.allclose(noise_covariance(H, crandn(rng, 6, 6), 0.0, 0.0), 0)
    Phi = noise_covariance(H, crandn(rng, 6, 6), 0.2, 0.1)
    assert np.allclose(Phi, Phi.conj().T)
    assert np.all(np.linalg.eigvalsh(Phi) > 0)


def test_noise_covariance_monte_carlo():
    rng = np.random.default_rng(3)
    H, G = crandn(rng, 4, 2), crandn(rng, 4, 4)
    s_rs, s_ue = 0.4, 0.2
    n = 100_000
    noise = H.T @ G @ (np.sqrt(s_rs) * crandn(rng, 4, n)) + np.sqrt(s_ue) * crandn(rng, 2, n)
    sample = noise @ noise.conj().T / n
    Phi = noise_covariance(H, G, s_rs, s_ue)
    scale = np.real(np.trace(Phi)) / 2
    assert np.max(np.abs(sample - Phi)) <= 0.03 * scale


def test_whitener_cases():
    assert np.allclose(whitener(4 * np.eye(3)), np.eye(3) / 2)
    assert np.allclose(whitener(np.diag([1.0, 9.0])), np.diag([1.0, 1 / 3]))
    rng = np.random.default_rng(4)
    Phi = random_pd(rng, 4)
    Q = whitener(Phi)
    assert np.allclose(Q, Q.conj().T)
    assert np.allclose(Q @ Phi @ Q, np.eye(4), atol=1e-9)


def test_whitener_rejects_non_positive_definite():
    with pytest.raises(NumericalError, match="smallest eigenvalue"):
        whitener(np.diag([1.0, 0.0]))
    with pytest.raises(NumericalError):
        whitener(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_water_fill_cases():
    p, _ = water_fill([1.0, 1.0], 3.0)
    assert np.allclose(p, [1.5, 1.5])

    p, _ = water_fill([10.0, 0.01], 0.1)
    assert np.allclose(p, [0.1, 0.0])

    with pytest.raises(DegenerateDesignError):
        water_fill([0.0, 0.0], 1.0)


def test_water_fill_budget_and_kkt():
    rng = np.random.default_rng(5)
    for _ in range(50):
        gains = np.sort(rng.uniform(0.05, 3.0, 4))[::-1]
        budget = rng.uniform(0.1, 5.0)
        p, mu = water_fill(gains, budget)
        assert np.sum(p) == pytest.approx(budget, rel=1e-9)
        for i in np.flatnonzero(p > 0):
            assert p[i] == pytest.approx(1 / mu - 1 / gains[i] ** 2, abs=1e-9)
            assert all(gains[i] >= gains[j] for j in np.flatnonzero(p == 0))


def test_water_fill_maximizes_capacity():
    rng = np.random.default_rng(6)
    gains = np.array([1.7, 0.9, 0.4, 0.2])
    budget = 2.0
    p, _ = water_fill(gains, budget)
    best = np.sum(np.log(1 + gains ** 2 * p))
    trials = rng.dirichlet(np.ones(4), size=100_000) * budget
    rates = np.sum(np.log(1 + gains ** 2 * trials), axis=1)
    assert np.max(rates) <= best + 1e-9


def test_water_fill_literal_floors():
    gains = np.array([2.0, 0.5])
    p, mu = water_fill(gains, 1.0, literal=True)
    active = p > 0
    assert np.allclose(p[active], 1 / mu - 1 / gains[active])


def test_design_beams_diagonal_case():
    F_pow = 2.0
    link = design_beams(np.diag([2.0, 1.0]), np.eye(2), 1, F_pow)
    assert np.allclose(link.F, [[np.sqrt(F_pow)], [0.0]])
    assert np.allclose(link.W, [[1.0], [0.0]])
    assert np.allclose(link.lambda_eff, [2.0])
    assert np.allclose(link.p, [F_pow])


def test_design_beams_isotropic_whitening_keeps_directions():
    rng = np.random.default_rng(7)
    H_bar = crandn(rng, 3, 3)
    reference = svd(H_bar)
    for c in (0.25, 4.0):
        link = design_beams(H_bar, c * np.eye(3), 2, 1.0)
        assert np.allclose(link.W * np.sqrt(c), reference.U[:, :2], atol=1e-9)
        active = link.p > 0
        directions = link.F[:, active] / np.linalg.norm(link.F[:, active], axis=0)
        assert np.allclose(directions, reference.V[:, :2][:, active], atol=1e-9)


def test_design_beams_invariants():
    rng = np.random.default_rng(8)
    H_bar = crandn(rng, 4, 4)
    Phi = random_pd(rng, 4)
    link = design_beams(H_bar, Phi, 3, 1.5)
    assert np.allclose(link.W.conj().T @ Phi @ link.W, np.eye(3), atol=1e-9)
    assert np.linalg.norm(link.F) ** 2 == pytest.approx(1.5, rel=1e-9)
    data = link.W.conj().T @ H_bar @ link.F
    assert np.allclose(data, np.diag(link.lambda_eff * np.sqrt(link.p)), atol=1e-9)


def test_design_beams_rejects_too_many_streams():
    with pytest.raises(DimensionError):
        design_beams(np.eye(2), np.eye(2), 3, 1.0)
