"""
Fully-digital relay amplification matrices.

ANOMAX maximizes ||H1^T G H2||_F^2 + ||H2^T G H1||_F^2 over unit-norm G, which is
the dominant right singular vector of K = [(H2 kron H1), (H1 kron H2)]^T.
RR-ANOMAX and ERR-ANOMAX keep singular subspaces and redesign the singular values
so the relay can carry several streams.
"""
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import numpy.typing as npt

from twr_beamform.models.channel import ChannelSet
from twr_beamform.models.design import FdRelayDesign
from twr_beamform.utils.errors import DegenerateDesignError, DimensionError
from twr_beamform.utils.logging_config import get_logger
from twr_beamform.utils.tensor_core import as_matrix, khatri_rao, kron, svd, unvec
from twr_beamform.utils.waterfilling import water_level

logger = get_logger(__name__)

Matrix = npt.NDArray[np.complex128]


def build_K(H1, H2) -> Matrix:
    """
    Stack both effective-channel maps so that ||K vec(G)||^2 equals
    ||H1^T G H2||_F^2 + ||H2^T G H1||_F^2.
    """
    H1 = as_matrix(H1)
    H2 = as_matrix(H2)
    if H1.shape[0] != H2.shape[0]:
        raise DimensionError(f"Channels disagree on relay antennas: {H1.shape[0]} vs {H2.shape[0]}")
    return np.hstack([kron(H2, H1), kron(H1, H2)]).T


def _dominant_directions(K: Matrix):
    decomposition = svd(K)
    if decomposition.s.size == 0 or decomposition.s[0] <= 0.0:
        raise DegenerateDesignError("All-zero K matrix: the channels carry no energy")
    return decomposition


def anomax(H1, H2) -> Matrix:
    """Unit-Frobenius ANOMAX amplification matrix."""
    K = build_K(H1, H2)
    M = K.shape[1]
    M_rs = int(round(np.sqrt(M)))
    decomposition = _dominant_directions(K)
    return unvec(decomposition.V[:, 0], M_rs, M_rs)


def rr_anomax(H1, H2, Ns: int) -> Matrix:
    """
    Rank-restored ANOMAX: keep the ANOMAX singular subspaces and flatten the
    first 2*Ns singular values to 1/sqrt(2*Ns).
    """
    G = anomax(H1, H2)
    M_rs = G.shape[0]
    n_modes = 2 * Ns
    if Ns < 1 or n_modes > M_rs:
        raise DimensionError(f"RR-ANOMAX needs 1 <= 2*Ns <= M_rs, got Ns={Ns}, M_rs={M_rs}")
    decomposition = svd(G)
    profile = np.zeros(M_rs)
    profile[:n_modes] = 1.0 / np.sqrt(n_modes)
    return (decomposition.U * profile) @ decomposition.V.conj().T


def err_singular_values(K: Matrix, U_G: Matrix, V_G: Matrix) -> Tuple[npt.NDArray[np.float64], float]:
    """
    Water-filled singular values for fixed singular vectors (U_G, V_G):
    lambda_j = max(1/mu - 1/lambda_Kt_j, 0) with sum_j lambda_j = 1,
    lambda_Kt the singular values of K (V_G^* khatri-rao U_G).
    """
    K_tilde = K @ khatri_rao(V_G.conj(), U_G)
    lam_kt = svd(K_tilde).s
    n = U_G.shape[1]
    gains = np.zeros(n)
    gains[:min(n, lam_kt.size)] = lam_kt[:n]
    if not np.any(gains > 0):
        raise DegenerateDesignError("ERR-ANOMAX: every singular value of K-tilde is zero")
    floors = np.full(n, np.inf)
    floors[gains > 0] = 1.0 / gains[gains > 0]
    return water_level(floors, 1.0)


def err_anomax(H1, H2, R: int = 2) -> Matrix:
    """
    Enhanced rank-restored ANOMAX.

    1. g_E = sum of the first R right singular vectors of K
    2. SVD of unvec(g_E) = U_G diag(lambda_G) V_G^H
    3. water-fill new singular values against K (V_G^* khatri-rao U_G)
    4. G = U_G diag(lambda*) V_G^H
    """
    K = build_K(H1, H2)
    M_rs = int(round(np.sqrt(K.shape[1])))
    decomposition = _dominant_directions(K)
    n_avail = decomposition.V.shape[1]
    if not 1 <= R <= n_avail:
        raise DimensionError(f"R={R} outside [1, {n_avail}]")
    g_e = decomposition.V[:, :R].sum(axis=1)
    G_e = svd(unvec(g_e, M_rs, M_rs))
    lam, mu = err_singular_values(K, G_e.U, G_e.V)
    logger.debug(f"ERR-ANOMAX R={R}: water level mu={mu:.4g}, active modes={int(np.sum(lam > 0))}")
    return (G_e.U * lam) @ G_e.V.conj().T


def normalize_relay_gain(G, Cx, P_rs: float) -> Tuple[Matrix, float]:
    """Scale G so that trace(G Cx G^H) = P_rs; returns (beta*G, beta)."""
    G = as_matrix(G)
    Cx = as_matrix(Cx)
    power = float(np.real(np.trace(G @ Cx @ G.conj().T)))
    if power <= 0.0:
        raise DegenerateDesignError(f"Relay matrix radiates no power (trace={power:.3e})")
    beta = float(np.sqrt(P_rs / power))
    return beta * G, beta


_FD_DESIGNERS: Dict[str, Callable[..., Matrix]] = {
    "anomax": lambda H1, H2, ns, r: anomax(H1, H2),
    "rr": lambda H1, H2, ns, r: rr_anomax(H1, H2, ns),
    "err": lambda H1, H2, ns, r: err_anomax(H1, H2, r),
}


def design_fd_relay(ch: ChannelSet, method: str, Ns: int, R: Optional[int] = 2) -> FdRelayDesign:
    """Design every subcarrier independently (unnormalized, beta = 1)."""
    if method not in _FD_DESIGNERS:
        raise ValueError(f"Unknown fully-digital method '{method}'")
    designer = _FD_DESIGNERS[method]
    G = [designer(ch.uplink(1, k), ch.uplink(2, k), Ns, R) for k in range(ch.K)]
    return FdRelayDesign(G=G, method=method, R=R if method == "err" else None)
