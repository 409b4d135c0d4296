"""
Data structures for multipath channel realizations.
"""
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
import numpy.typing as npt

from twr_beamform.utils.errors import DimensionError, NumericalError


@dataclass(frozen=True)
class PathSet:
    """Geometric paths of one relay-to-mobile link."""
    gains: npt.NDArray[np.complex128]
    aod_spatial: npt.NDArray[np.float64]  # relay side, in [-1, 1)
    aoa_spatial: npt.NDArray[np.float64]  # mobile side, in [-1, 1)
    delays: npt.NDArray[np.int64]         # taps in {0, ..., D-1}

    def __post_init__(self):
        n = len(self.gains)
        if n < 1:
            raise DimensionError("A PathSet needs at least one path")
        for name in ("aod_spatial", "aoa_spatial", "delays"):
            if len(getattr(self, name)) != n:
                raise DimensionError(f"PathSet.{name} has length {len(getattr(self, name))}, expected {n}")

    @property
    def L(self) -> int:
        return len(self.gains)


@dataclass
class ChannelSet:
    """
    One Monte Carlo realization of both uplink channels on every subcarrier.

    ``H[l]`` has shape (K, M_rs, M_l); the downlink channel is always the transpose
    of the stored uplink matrix.
    """
    H: Tuple[npt.NDArray[np.complex128], npt.NDArray[np.complex128]]
    sigma2_rs: float
    sigma2_ue: float
    seed: int | None = None
    paths: Tuple[PathSet, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.H) != 2:
            raise DimensionError(f"ChannelSet holds two links, got {len(self.H)}")
        h1, h2 = (np.asarray(h, dtype=np.complex128) for h in self.H)
        if h1.ndim != 3 or h2.ndim != 3:
            raise DimensionError("Channel stacks must have shape (K, M_rs, M_l)")
        if h1.shape[:2] != h2.shape[:2]:
            raise DimensionError(f"Inconsistent channel stacks {h1.shape} and {h2.shape}")
        if not (np.all(np.isfinite(h1)) and np.all(np.isfinite(h2))):
            raise NumericalError("Channel entries must be finite")
        if self.sigma2_rs < 0 or self.sigma2_ue < 0:
            raise NumericalError("Noise variances must be nonnegative")
        self.H = (h1, h2)

    @property
    def K(self) -> int:
        return self.H[0].shape[0]

    @property
    def M_rs(self) -> int:
        return self.H[0].shape[1]

    def M(self, l: int) -> int:
        """Antenna count of mobile station l (1 or 2)."""
        return self.H[l - 1].shape[2]

    def uplink(self, l: int, k: int) -> npt.NDArray[np.complex128]:
        """H_{l,k}: M_rs x M_l."""
        return self.H[l - 1][k]

    def downlink(self, l: int, k: int) -> npt.NDArray[np.complex128]:
        """H_{l,k}^T (TDD reciprocity)."""
        return self.H[l - 1][k].T

    def with_noise(self, sigma2_rs: float, sigma2_ue: float) -> "ChannelSet":
        """Same channel matrices under different noise variances."""
        return ChannelSet(H=self.H, sigma2_rs=sigma2_rs, sigma2_ue=sigma2_ue, seed=self.seed, paths=self.paths)
