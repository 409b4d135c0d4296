"""
Data structures for relay amplification designs and terminal beams.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, Field

from twr_beamform.utils.errors import DimensionError, NumericalError

FdMethod = Literal["anomax", "rr", "err"]
HadMethod = Literal["had_hosvd", "had_hosvd_ls", "had_altmax"]

UNIT_MODULUS_TOL = 1e-12


@dataclass
class FdRelayDesign:
    """Per-subcarrier fully-digital relay matrices."""
    G: List[npt.NDArray[np.complex128]]
    method: FdMethod
    R: Optional[int] = None
    beta: List[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.beta:
            self.beta = [1.0] * len(self.G)

    @property
    def K(self) -> int:
        return len(self.G)

    def matrix(self, k: int) -> npt.NDArray[np.complex128]:
        """beta_k * G_k."""
        return self.beta[k] * self.G[k]


@dataclass
class HadRelayDesign:
    """Hybrid design G_k = beta_k * A_tx B_k A_rx^T with shared analog factors."""
    A_tx: npt.NDArray[np.complex128]
    A_rx: npt.NDArray[np.complex128]
    B: List[npt.NDArray[np.complex128]]
    method: HadMethod
    beta: List[float] = field(default_factory=list)
    constrained: bool = True
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.A_tx.shape != self.A_rx.shape:
            raise DimensionError(f"Analog factors differ in shape: {self.A_tx.shape} vs {self.A_rx.shape}")
        n_rs = self.A_tx.shape[1]
        for k, B_k in enumerate(self.B):
            if B_k.shape != (n_rs, n_rs):
                raise DimensionError(f"Baseband slice {k} has shape {B_k.shape}, expected {(n_rs, n_rs)}")
        if self.constrained:
            for name in ("A_tx", "A_rx"):
                deviation = np.max(np.abs(np.abs(getattr(self, name)) - 1.0))
                if deviation > UNIT_MODULUS_TOL:
                    raise NumericalError(f"{name} violates the unit-modulus constraint by {deviation:.3e}")
        if not self.beta:
            self.beta = [1.0] * len(self.B)

    @property
    def K(self) -> int:
        return len(self.B)

    @property
    def n_rs(self) -> int:
        return self.A_tx.shape[1]


@dataclass
class LinkBeams:
    """Beams of one direction l' -> l on one subcarrier."""
    F: npt.NDArray[np.complex128]           # precoder of the transmitting MS, M_l' x Ns
    W: npt.NDArray[np.complex128]           # decoder of the receiving MS, M_l x Ns
    p: npt.NDArray[np.float64]              # stream powers
    lambda_eff: npt.NDArray[np.float64]     # whitened singular values
    mu: float = 0.0                         # terminal water level


@dataclass
class TerminalBeams:
    """
    Beams of both mobile stations on every subcarrier.

    ``F[l][k]`` is the precoder of MS l, ``W[l][k]`` its decoder, and ``p[l][k]`` /
    ``lambda_eff[l][k]`` describe the streams received by MS l. Index l is 0 or 1.
    """
    F: List[List[npt.NDArray[np.complex128]]]
    W: List[List[npt.NDArray[np.complex128]]]
    p: List[List[npt.NDArray[np.float64]]]
    lambda_eff: List[List[npt.NDArray[np.float64]]]

    @classmethod
    def empty(cls, K: int) -> "TerminalBeams":
        return cls(
            F=[[None] * K, [None] * K],
            W=[[None] * K, [None] * K],
            p=[[None] * K, [None] * K],
            lambda_eff=[[None] * K, [None] * K],
        )

    def set_link(self, rx: int, k: int, link: LinkBeams):
        """Store the beams of the link received by MS ``rx`` (0 or 1)."""
        tx = 1 - rx
        self.F[tx][k] = link.F
        self.W[rx][k] = link.W
        self.p[rx][k] = link.p
        self.lambda_eff[rx][k] = link.lambda_eff


class AltMaxOptions(BaseModel):
    """Options of the column-wise unit-modulus trace maximization."""
    tol: float = Field(default=1e-8, gt=0)
    max_iter: int = Field(default=200, ge=1)
    deflation_strength: float = Field(default=1.0, ge=0.0, le=1.0)
    init: Literal["hosvd", "random"] = "hosvd"
    seed: int = 0
    outer_refine: bool = False
    outer_iters: int = Field(default=5, ge=1)
