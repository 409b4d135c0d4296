"""
Hybrid analog-digital relay design as a constrained Tucker2 decomposition.

The fully-digital matrices G_k are stacked along the third mode and approximated
by A_tx B_k A_rx^T with unit-modulus A_tx, A_rx shared by all subcarriers.
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg

from twr_beamform.designers.fd_relay import normalize_relay_gain
from twr_beamform.models.design import AltMaxOptions, HadRelayDesign
from twr_beamform.utils.errors import DimensionError, NumericalError
from twr_beamform.utils.logging_config import get_logger
from twr_beamform.utils.tensor_core import (
    as_matrix,
    hosvd,
    kron,
    mode_product,
    mode_unfold,
    relative_error,
    stack_slices,
    svd,
    unvec,
)

logger = get_logger(__name__)

Matrix = npt.NDArray[np.complex128]
Tensor = npt.NDArray[np.complex128]

HERMITIAN_TOL = 1e-8


def stack_fd_tensor(G_fd: Sequence) -> Tensor:
    """Concatenate the fully-digital matrices along the third mode."""
    T = stack_slices(G_fd)
    if T.shape[0] != T.shape[1]:
        raise DimensionError(f"Relay matrices must be square, got {T.shape[:2]}")
    return T


def unit_modulus_project(M) -> Matrix:
    """Entry-wise u/|u|; zero entries map to 1."""
    M = np.asarray(M, dtype=np.complex128)
    mag = np.abs(M)
    return np.divide(M, mag, out=np.ones_like(M), where=mag > 0)


def _check_width(Gt: Tensor, N_rs: int):
    M_rs = Gt.shape[0]
    if not 1 <= N_rs <= M_rs:
        raise DimensionError(f"N_rs={N_rs} must lie in [1, M_rs={M_rs}]")


def had_hosvd(Gt: Tensor, N_rs: int, project: bool = True) -> HadRelayDesign:
    """
    Non-iterative HOSVD solution: projected leading factor columns and the
    truncated core as baseband. ``project=False`` keeps the unconstrained factors.
    """
    Gt = np.asarray(Gt, dtype=np.complex128)
    _check_width(Gt, N_rs)
    core, U1, U2, U3 = hosvd(Gt)
    # Tucker2 core: the third mode stays uncompressed, B_k = U1^H G_k U2^*
    core = mode_product(core, U3, 3)
    A_tx = U1[:, :N_rs]
    A_rx = U2[:, :N_rs]
    if project:
        A_tx = unit_modulus_project(A_tx)
        A_rx = unit_modulus_project(A_rx)
    B = [core[:N_rs, :N_rs, k].copy() for k in range(Gt.shape[2])]
    design = HadRelayDesign(A_tx=A_tx, A_rx=A_rx, B=B, method="had_hosvd", constrained=project)
    design.diagnostics["reconstruction_error"] = reconstruction_error(Gt, design)
    return design


def had_hosvd_ls(Gt: Tensor, N_rs: int) -> HadRelayDesign:
    """HOSVD analog factors with least-squares baseband matrices."""
    Gt = np.asarray(Gt, dtype=np.complex128)
    _check_width(Gt, N_rs)
    _, U1, U2, _ = hosvd(Gt)
    A_tx = unit_modulus_project(U1[:, :N_rs])
    A_rx = unit_modulus_project(U2[:, :N_rs])
    design = HadRelayDesign(A_tx=A_tx, A_rx=A_rx, B=baseband_ls(Gt, A_tx, A_rx), method="had_hosvd_ls")
    design.diagnostics["reconstruction_error"] = reconstruction_error(Gt, design)
    return design


def _orthonormal_basis(A: Matrix) -> Matrix:
    if A.shape[1] == 0:
        return A
    return scipy.linalg.orth(A)


def ascend_column(Q: Matrix, a: Matrix, tol: float, max_iter: int) -> Tuple[Matrix, List[float]]:
    """
    Projected power iteration a <- Pi(Q a) on a^H Q a. Returns the column and
    the objective after every step.
    """
    history = [float(np.real(a.conj() @ Q @ a))]
    for _ in range(max_iter):
        a = unit_modulus_project(Q @ a)
        history.append(float(np.real(a.conj() @ Q @ a)))
        change = abs(history[-1] - history[-2])
        if change <= tol * max(abs(history[-1]), np.finfo(float).tiny):
            break
    return a, history


def altmax_analog(
    Q,
    M: int,
    N_rs: int,
    opts: Optional[AltMaxOptions] = None,
    init: Optional[Matrix] = None,
) -> Tuple[Matrix, float]:
    """
    Column-wise unit-modulus maximization of trace(A^H Q A).

    Column j ascends a_j <- Pi(Q_j a_j) with Q_j = P_j Q P_j, where P_j removes
    (scaled by the deflation strength) the span of the columns already fixed.

    Returns:
        Tuple of (M x N_rs unit-modulus matrix, undeflated objective trace(A^H Q A))
    """
    opts = opts or AltMaxOptions()
    Q = as_matrix(Q)
    if Q.shape != (M, M):
        raise DimensionError(f"Q must be {M}x{M}, got {Q.shape}")
    asymmetry = np.linalg.norm(Q - Q.conj().T)
    if asymmetry > HERMITIAN_TOL * max(np.linalg.norm(Q), 1.0):
        raise NumericalError(f"Q is not Hermitian (asymmetry {asymmetry:.3e})")
    Q = 0.5 * (Q + Q.conj().T)

    if init is None:
        rng = np.random.default_rng(opts.seed)
        A = np.exp(2j * np.pi * rng.uniform(size=(M, N_rs)))
    else:
        A = unit_modulus_project(init)
        if A.shape != (M, N_rs):
            raise DimensionError(f"Initial analog matrix must be {M}x{N_rs}, got {A.shape}")

    sweeps = 0
    for j in range(N_rs):
        basis = _orthonormal_basis(A[:, :j])
        P = np.eye(M) - opts.deflation_strength * (basis @ basis.conj().T)
        Q_j = P @ Q @ P.conj().T
        A[:, j], history = ascend_column(Q_j, A[:, j], opts.tol, opts.max_iter)
        sweeps += len(history) - 1

    objective = float(np.real(np.trace(A.conj().T @ Q @ A)))
    logger.debug(f"AltMax M={M}, N_rs={N_rs}: objective={objective:.6g} after {sweeps} column steps")
    return A, objective


def baseband_ls(Gt: Tensor, A_tx, A_rx) -> List[Matrix]:
    """
    Least-squares baseband matrices for fixed analog factors:
    [B]_(3) = [Gt]_(3) [(A_rx kron A_tx)^T]^+.
    """
    Gt = np.asarray(Gt, dtype=np.complex128)
    A_tx = as_matrix(A_tx)
    A_rx = as_matrix(A_rx)
    if A_tx.shape[0] != Gt.shape[0] or A_rx.shape[0] != Gt.shape[1]:
        raise DimensionError(f"Analog factors {A_tx.shape}, {A_rx.shape} do not match tensor {Gt.shape}")
    N_tx = A_tx.shape[1]
    N_rx = A_rx.shape[1]
    X = kron(A_rx, A_tx).T
    rank = np.linalg.matrix_rank(X)
    if rank < N_tx * N_rx:
        logger.warning(f"Baseband LS is rank deficient ({rank} < {N_tx * N_rx}); using the minimum-norm solution")
    B3 = mode_unfold(Gt, 3) @ scipy.linalg.pinv(X)
    return [unvec(B3[k], N_tx, N_rx) for k in range(Gt.shape[2])]


def _refine(Gt: Tensor, design_tx: Matrix, design_rx: Matrix, iters: int) -> Tuple[Matrix, Matrix, List[Matrix]]:
    """Alternating projected least-squares refinement of the analog factors."""
    A_tx, A_rx = design_tx, design_rx
    B = baseband_ls(Gt, A_tx, A_rx)
    best = (A_tx, A_rx, B, _tucker_error(Gt, A_tx, A_rx, B))
    K = Gt.shape[2]
    for it in range(iters):
        # [Gt]_(1) = A_tx [B]_(1) (I_K kron A_rx)^T
        Z_tx = np.hstack([B_k @ A_rx.T for B_k in B])
        A_tx = unit_modulus_project(mode_unfold(Gt, 1) @ scipy.linalg.pinv(Z_tx))
        # [Gt]_(2) = A_rx [B]_(2) (I_K kron A_tx)^T
        Z_rx = np.hstack([B_k.T @ A_tx.T for B_k in B])
        A_rx = unit_modulus_project(mode_unfold(Gt, 2) @ scipy.linalg.pinv(Z_rx))
        B = baseband_ls(Gt, A_tx, A_rx)
        err = _tucker_error(Gt, A_tx, A_rx, B)
        logger.debug(f"Outer refinement {it + 1}: reconstruction error {err:.6g}")
        if err < best[3]:
            best = (A_tx, A_rx, B, err)
        else:
            break
    return best[0], best[1], best[2]


def had_altmax(Gt: Tensor, N_rs: int, opts: Optional[AltMaxOptions] = None) -> HadRelayDesign:
    """
    AltMax solution: A_tx from the one-mode Gram [Gt]_(1)[Gt]_(1)^H, A_rx from the
    two-mode Gram, then least-squares baseband matrices.
    """
    opts = opts or AltMaxOptions()
    Gt = np.asarray(Gt, dtype=np.complex128)
    _check_width(Gt, N_rs)
    M = Gt.shape[0]

    factors = []
    for n in (1, 2):
        unfolding = mode_unfold(Gt, n)
        Q = unfolding @ unfolding.conj().T
        init = unit_modulus_project(svd(unfolding).U[:, :N_rs]) if opts.init == "hosvd" else None
        A, objective = altmax_analog(Q, M, N_rs, opts, init=init)
        factors.append(A)
    A_tx, A_rx = factors

    if opts.outer_refine:
        A_tx, A_rx, B = _refine(Gt, A_tx, A_rx, opts.outer_iters)
    else:
        B = baseband_ls(Gt, A_tx, A_rx)
    design = HadRelayDesign(A_tx=A_tx, A_rx=A_rx, B=B, method="had_altmax")
    design.diagnostics["reconstruction_error"] = reconstruction_error(Gt, design)
    return design


def _tucker_error(Gt: Tensor, A_tx: Matrix, A_rx: Matrix, B: Sequence[Matrix]) -> float:
    approx = np.stack([A_tx @ B_k @ A_rx.T for B_k in B], axis=2)
    return relative_error(approx, Gt)


def reconstruction_error(Gt: Tensor, design: HadRelayDesign) -> float:
    """
    Relative Frobenius error of the hybrid tensor against Gt, each slice taken
    with its best positive gain (the freedom per-subcarrier power normalization has).
    Least-squares baseband designs already sit at gain 1.
    """
    Gt = np.asarray(Gt, dtype=np.complex128)
    residual = 0.0
    for k, B_k in enumerate(design.B):
        approx = design.A_tx @ B_k @ design.A_rx.T
        power = float(np.real(np.vdot(approx, approx)))
        gain = max(float(np.real(np.vdot(approx, Gt[:, :, k]))), 0.0) / power if power > 0 else 0.0
        residual += float(np.linalg.norm(gain * approx - Gt[:, :, k]) ** 2)
    ref = float(np.linalg.norm(Gt))
    return float(np.sqrt(residual) / ref) if ref > 0 else float(np.sqrt(residual))


def compose_had(d: HadRelayDesign, k: int) -> Matrix:
    """beta_k * A_tx B_k A_rx^T."""
    if not 0 <= k < d.K:
        raise DimensionError(f"Subcarrier {k} outside [0, {d.K})")
    return d.beta[k] * (d.A_tx @ d.B[k] @ d.A_rx.T)


def normalize_had(d: HadRelayDesign, covariances: Sequence[Matrix], P_rs: float) -> HadRelayDesign:
    """Set beta_k so every composed matrix meets the relay power under its covariance."""
    betas = []
    for k, Cx in enumerate(covariances):
        _, beta = normalize_relay_gain(d.A_tx @ d.B[k] @ d.A_rx.T, Cx, P_rs)
        betas.append(beta)
    d.beta = betas
    return d
