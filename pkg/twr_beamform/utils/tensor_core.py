"""
Dense complex linear algebra and 3-way tensor machinery.

Matrices are 2-D complex numpy arrays. A 3-way tensor is a complex array of shape
(I, J, K) whose frontal slice k is ``T[:, :, k]``. Unfoldings follow the
forward-cyclical convention:

    mode-1: I x (J*K)  [G_0, G_1, ..., G_{K-1}]           column k*J + j
    mode-2: J x (I*K)  [G_0^T, G_1^T, ..., G_{K-1}^T]     column k*I + i
    mode-3: K x (I*J)  row k = vec(G_k)^T

With this ordering a tensor with slices A B_k C^T satisfies
[T]_(1) = A [B]_(1) (I_K kron C)^T, [T]_(2) = C [B]_(2) (I_K kron A)^T and
[T]_(3) = [B]_(3) (C kron A)^T.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg

from twr_beamform.config import settings
from twr_beamform.utils.errors import DimensionError, NumericalError
from twr_beamform.utils.logging_config import get_logger

logger = get_logger(__name__)

ComplexMatrix = npt.NDArray[np.complex128]
ComplexTensor3 = npt.NDArray[np.complex128]

# Relative magnitude below which an entry counts as zero for the SVD phase convention
_PHASE_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD A = U diag(s) V^H with a fixed phase gauge."""
    U: ComplexMatrix
    s: npt.NDArray[np.float64]
    V: ComplexMatrix

    def reconstruct(self) -> ComplexMatrix:
        return (self.U * self.s) @ self.V.conj().T


def as_matrix(M) -> ComplexMatrix:
    """Coerce to a finite 2-D complex array."""
    A = np.asarray(M, dtype=np.complex128)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2:
        raise DimensionError(f"Expected a matrix, got array with shape {A.shape}")
    if A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"Matrix must have at least one row and column, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericalError("Matrix contains NaN or Inf entries")
    return A


def vec(M) -> npt.NDArray[np.complex128]:
    """Stack the columns of M into one vector (column-major)."""
    return np.asarray(M, dtype=np.complex128).reshape(-1, order="F")


def unvec(v, rows: int, cols: int) -> ComplexMatrix:
    """Inverse of vec."""
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    if v.size != rows * cols:
        raise DimensionError(f"Cannot unvec length {v.size} into {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def kron(A, B) -> ComplexMatrix:
    return np.kron(np.asarray(A, dtype=np.complex128), np.asarray(B, dtype=np.complex128))


def khatri_rao(A, B) -> ComplexMatrix:
    """Column-wise Kronecker product: column j is kron(A[:, j], B[:, j])."""
    A = np.asarray(A, dtype=np.complex128)
    B = np.asarray(B, dtype=np.complex128)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
        raise DimensionError(f"Khatri-Rao needs equal column counts, got {A.shape} and {B.shape}")
    n_cols = A.shape[1]
    return np.einsum("ij,kj->ikj", A, B).reshape(A.shape[0] * B.shape[0], n_cols)


def stack_slices(slices: Sequence) -> ComplexTensor3:
    """Build a tensor whose frontal slice k is ``slices[k]``."""
    if len(slices) == 0:
        raise DimensionError("Cannot build a tensor from zero slices")
    mats = [np.asarray(s, dtype=np.complex128) for s in slices]
    shape = mats[0].shape
    for k, m in enumerate(mats):
        if m.ndim != 2 or m.shape != shape:
            raise DimensionError(f"Slice {k} has shape {m.shape}, expected {shape}")
    return np.stack(mats, axis=2)


def _check_mode(n: int):
    if n not in (1, 2, 3):
        raise DimensionError(f"Mode must be 1, 2 or 3, got {n}")


def mode_unfold(T: ComplexTensor3, n: int) -> ComplexMatrix:
    """n-mode unfolding in forward-cyclical ordering (see module docstring)."""
    _check_mode(n)
    T = np.asarray(T, dtype=np.complex128)
    if T.ndim != 3:
        raise DimensionError(f"Expected a 3-way tensor, got shape {T.shape}")
    I, J, K = T.shape
    if n == 1:
        return T.transpose(0, 2, 1).reshape(I, K * J)
    if n == 2:
        return T.transpose(1, 2, 0).reshape(J, K * I)
    return T.transpose(2, 1, 0).reshape(K, J * I)


def mode_fold(X: ComplexMatrix, n: int, shape: Tuple[int, int, int]) -> ComplexTensor3:
    """Inverse of mode_unfold for a tensor of the given shape."""
    _check_mode(n)
    I, J, K = shape
    X = np.asarray(X, dtype=np.complex128)
    if n == 1:
        return X.reshape(I, K, J).transpose(0, 2, 1)
    if n == 2:
        return X.reshape(J, K, I).transpose(2, 0, 1)
    return X.reshape(K, J, I).transpose(2, 1, 0)


def mode_product(T: ComplexTensor3, M, n: int) -> ComplexTensor3:
    """n-mode product T x_n M, i.e. unfold_n(result) = M @ unfold_n(T)."""
    M = np.asarray(M, dtype=np.complex128)
    shape = list(T.shape)
    if M.shape[1] != shape[n - 1]:
        raise DimensionError(f"Mode-{n} product needs {shape[n - 1]} columns, got {M.shape}")
    shape[n - 1] = M.shape[0]
    return mode_fold(M @ mode_unfold(T, n), n, tuple(shape))


def _fix_phase(U: ComplexMatrix, V: ComplexMatrix) -> Tuple[ComplexMatrix, ComplexMatrix]:
    """Rotate each singular pair so the first nonzero entry of U[:, j] is real >= 0."""
    U = U.copy()
    V = V.copy()
    for j in range(U.shape[1]):
        col = U[:, j]
        scale = np.max(np.abs(col)) if col.size else 0.0
        if scale == 0.0:
            continue
        idx = int(np.argmax(np.abs(col) > _PHASE_ZERO_TOL * scale))
        phase = col[idx] / abs(col[idx])
        U[:, j] *= np.conj(phase)
        V[:, j] *= np.conj(phase)
    return U, V


def svd(A, full_matrices: bool = False) -> SvdResult:
    """SVD with descending singular values and a deterministic phase gauge."""
    A = as_matrix(A)
    try:
        U, s, Vh = scipy.linalg.svd(A, full_matrices=full_matrices, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        logger.debug(f"gesdd failed on {A.shape} matrix, retrying with gesvd")
        U, s, Vh = scipy.linalg.svd(A, full_matrices=full_matrices, lapack_driver="gesvd")
    U, V = _fix_phase(U, Vh.conj().T)
    return SvdResult(U=U, s=s, V=V)


def numerical_rank(A, rel_tol: Optional[float] = None) -> int:
    """Number of singular values above rel_tol * sigma_1 (default: TWR_RANK_THRESHOLD)."""
    if rel_tol is None:
        rel_tol = settings.numerics.rank_threshold
    s = scipy.linalg.svdvals(as_matrix(A))
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def hosvd(T: ComplexTensor3) -> Tuple[ComplexTensor3, ComplexMatrix, ComplexMatrix, ComplexMatrix]:
    """
    Higher-order SVD of a 3-way tensor.

    Returns:
        (core, U1, U2, U3) with T = core x_1 U1 x_2 U2 x_3 U3
    """
    T = np.asarray(T, dtype=np.complex128)
    factors: List[ComplexMatrix] = [svd(mode_unfold(T, n)).U for n in (1, 2, 3)]
    core = T
    for n, U in enumerate(factors, start=1):
        core = mode_product(core, U.conj().T, n)
    return core, factors[0], factors[1], factors[2]


def tucker_reconstruct(core: ComplexTensor3, U1, U2, U3) -> ComplexTensor3:
    T = mode_product(core, U1, 1)
    T = mode_product(T, U2, 2)
    return mode_product(T, U3, 3)


def relative_error(estimate, reference) -> float:
    """||estimate - reference||_F / ||reference||_F (absolute error if the reference is zero)."""
    ref_norm = np.linalg.norm(reference)
    err = np.linalg.norm(np.asarray(estimate) - np.asarray(reference))
    return float(err / ref_norm) if ref_norm > 0 else float(err)
