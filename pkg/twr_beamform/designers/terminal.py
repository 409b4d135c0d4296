"""
Mobile-station processing for a fixed relay matrix: effective channels, noise
whitening, SVD precoder/decoder and water-filling power allocation.
"""
from typing import Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg

from twr_beamform.models.design import LinkBeams
from twr_beamform.utils.errors import DegenerateDesignError, DimensionError, NumericalError
from twr_beamform.utils.logging_config import get_logger
from twr_beamform.utils.tensor_core import as_matrix, svd
from twr_beamform.utils.waterfilling import water_level

logger = get_logger(__name__)

Matrix = npt.NDArray[np.complex128]

PD_RATIO = 1e-12


def effective_channel(H_rx, G, H_tx) -> Matrix:
    """H_rx^T G H_tx: end-to-end channel from the transmitting to the receiving MS."""
    H_rx = as_matrix(H_rx)
    G = as_matrix(G)
    H_tx = as_matrix(H_tx)
    if G.shape != (H_rx.shape[0], H_tx.shape[0]):
        raise DimensionError(f"Relay matrix {G.shape} does not fit channels {H_rx.shape}, {H_tx.shape}")
    return H_rx.T @ G @ H_tx


def noise_covariance(H, G, sigma2_rs: float, sigma2_ue: float) -> Matrix:
    """sigma2_rs H^T G G^H H^* + sigma2_ue I: covariance of the forwarded plus local noise."""
    H = as_matrix(H)
    G = as_matrix(G)
    HtG = H.T @ G
    Phi = sigma2_rs * (HtG @ HtG.conj().T) + sigma2_ue * np.eye(H.shape[1])
    return 0.5 * (Phi + Phi.conj().T)


def whitener(Phi) -> Matrix:
    """Phi^{-1/2} via eigendecomposition."""
    Phi = as_matrix(Phi)
    if np.linalg.norm(Phi - Phi.conj().T) > 1e-10 * max(np.linalg.norm(Phi), 1.0):
        raise NumericalError("Noise covariance is not Hermitian")
    eigvals, V = scipy.linalg.eigh(0.5 * (Phi + Phi.conj().T))
    largest = eigvals[-1]
    if largest <= 0 or eigvals[0] <= PD_RATIO * largest:
        raise NumericalError(
            f"Noise covariance is not positive definite: smallest eigenvalue {eigvals[0]:.3e} "
            f"(largest {largest:.3e})"
        )
    return (V / np.sqrt(eigvals)) @ V.conj().T


def water_fill(gains, budget: float, literal: bool = False) -> Tuple[npt.NDArray[np.float64], float]:
    """
    Capacity water-filling p_i = max(1/mu - 1/lambda_i^2, 0), sum p_i = budget.
    ``literal`` uses 1/lambda_i instead of 1/lambda_i^2.
    """
    gains = np.asarray(gains, dtype=np.float64)
    usable = gains > 0
    if not np.any(usable):
        raise DegenerateDesignError("Water-filling needs at least one positive channel gain")
    floors = np.full(gains.shape, np.inf)
    floors[usable] = 1.0 / (gains[usable] if literal else gains[usable] ** 2)
    return water_level(floors, budget)


def design_beams(H_bar, Phi, Ns: int, P_ue: float, literal_waterfill: bool = False) -> LinkBeams:
    """
    Precoder and decoder of one link from the whitened effective channel.

    F = V[:, :Ns] diag(sqrt(p)), W = Q U[:, :Ns] with Q = Phi^{-1/2}, so that
    W^H Phi W = I and W^H H_bar F = diag(lambda_i sqrt(p_i)).
    """
    H_bar = as_matrix(H_bar)
    if not 1 <= Ns <= min(H_bar.shape):
        raise DimensionError(f"Ns={Ns} must lie in [1, {min(H_bar.shape)}]")
    Q = whitener(Phi)
    decomposition = svd(Q @ H_bar)
    lam = decomposition.s[:Ns]
    p, mu = water_fill(lam, P_ue, literal=literal_waterfill)
    F = decomposition.V[:, :Ns] * np.sqrt(p)
    W = Q @ decomposition.U[:, :Ns]
    return LinkBeams(F=F, W=W, p=p, lambda_eff=lam, mu=mu)
