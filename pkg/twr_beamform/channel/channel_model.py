"""
Geometric Saleh-Valenzuela multipath channels for MIMO-OFDM links.
Each path carries its own gain, relay-side and mobile-side spatial frequency,
and an integer delay tap; uniform linear half-wavelength arrays at every node.
"""
from pathlib import Path
from typing import Optional

import numpy as np
import numpy.typing as npt

from twr_beamform.models.channel import ChannelSet, PathSet
from twr_beamform.utils.errors import DimensionError
from twr_beamform.utils.logging_config import get_logger

logger = get_logger(__name__)


def steering_vector(M: int, f: float) -> npt.NDArray[np.complex128]:
    """ULA response exp(j*pi*m*f), m = 0..M-1."""
    if M < 1:
        raise DimensionError(f"Array size must be positive, got {M}")
    return np.exp(1j * np.pi * np.arange(M) * f)


def generate_paths(rng: np.random.Generator, L: int, D: int) -> PathSet:
    """
    Draw L independent paths.

    Gains are CN(0, 1/L), spatial frequencies uniform on [-1, 1), delays uniform
    on {0, ..., D-1}.
    """
    if L < 1 or D < 1:
        raise DimensionError(f"Need L >= 1 and D >= 1, got L={L}, D={D}")
    gains = np.sqrt(1.0 / (2 * L)) * (rng.standard_normal(L) + 1j * rng.standard_normal(L))
    aod = rng.uniform(-1.0, 1.0, L)
    aoa = rng.uniform(-1.0, 1.0, L)
    delays = rng.integers(0, D, L)
    return PathSet(gains=gains, aod_spatial=aod, aoa_spatial=aoa, delays=delays)


def frequency_response(p: PathSet, M_rx: int, M_tx: int, k: int, K: int) -> npt.NDArray[np.complex128]:
    """
    Channel matrix of subcarrier k:

        H_k = sqrt(M_rx*M_tx/L) * sum_i g_i exp(-j 2 pi k d_i / K) a(M_rx, aod_i) a(M_tx, aoa_i)^T
    """
    if not 0 <= k < K:
        raise DimensionError(f"Subcarrier index {k} outside [0, {K})")
    if np.any(p.delays >= K):
        raise DimensionError(f"Path delays must be below K={K}, got max delay {int(np.max(p.delays))}")
    A_rx = np.exp(1j * np.pi * np.outer(np.arange(M_rx), p.aod_spatial))  # M_rx x L
    A_tx = np.exp(1j * np.pi * np.outer(np.arange(M_tx), p.aoa_spatial))  # M_tx x L
    weights = p.gains * np.exp(-2j * np.pi * k * p.delays / K)
    return np.sqrt(M_rx * M_tx / p.L) * (A_rx * weights) @ A_tx.T


def generate_channel_set(
    rng: np.random.Generator,
    M_rs: int,
    M1: int,
    M2: int,
    K: int,
    L: int = 6,
    D: int = 8,
    sigma2_rs: float = 1.0,
    sigma2_ue: float = 1.0,
    unit_energy: bool = True,
    seed: Optional[int] = None,
) -> ChannelSet:
    """
    Draw both relay-to-mobile links for every subcarrier.

    Delays are limited to min(D, K) taps. With ``unit_energy`` the matrices are
    rescaled so that E||H_k||_F^2 = M_rs * M_l.
    """
    taps = min(D, K)
    stacks = []
    paths = []
    for M_l in (M1, M2):
        p = generate_paths(rng, L, taps)
        H = np.stack([frequency_response(p, M_rs, M_l, k, K) for k in range(K)], axis=0)
        if unit_energy:
            H *= np.sqrt(L / (M_rs * M_l))
        stacks.append(H)
        paths.append(p)
    logger.debug(f"Generated channels: M_rs={M_rs}, M=({M1},{M2}), K={K}, L={L}, taps={taps}")
    return ChannelSet(H=(stacks[0], stacks[1]), sigma2_rs=sigma2_rs, sigma2_ue=sigma2_ue,
                      seed=seed, paths=tuple(paths))


def dump_channel_set(ch: ChannelSet, path: Path, seed: Optional[int] = None) -> Path:
    """
    Write a channel realization for replay: a '#' header with dims and seed,
    then one 're,im' line per entry, column-major, slice by slice, link 1 first.
    """
    path = Path(path)
    seed = ch.seed if seed is None else seed
    header = [
        "# twr-beamform channel dump",
        f"# dims K={ch.K} M_rs={ch.M_rs} M1={ch.M(1)} M2={ch.M(2)}",
        f"# seed={seed}",
        f"# sigma2_rs={float(ch.sigma2_rs)!r} sigma2_ue={float(ch.sigma2_ue)!r}",
    ]
    entries = []
    for l in (1, 2):
        for k in range(ch.K):
            entries.append(ch.uplink(l, k).reshape(-1, order="F"))
    values = np.concatenate(entries)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(header) + "\n")
        for v in values:
            f.write(f"{float(v.real)!r},{float(v.imag)!r}\n")
    logger.info(f"Dumped channel realization to {path}")
    return path


def load_channel_set(path: Path) -> ChannelSet:
    """Read a file written by dump_channel_set."""
    path = Path(path)
    meta = {}
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            for token in line[1:].split():
                if "=" in token:
                    key, value = token.split("=", 1)
                    meta[key] = value
        elif line.strip():
            body.append(line)
    try:
        K, M_rs, M1, M2 = (int(meta[key]) for key in ("K", "M_rs", "M1", "M2"))
    except KeyError as e:
        raise DimensionError(f"Channel dump {path} is missing header field {e}") from e
    values = np.array([complex(float(re), float(im)) for re, im in (b.split(",") for b in body)])
    expected = K * M_rs * (M1 + M2)
    if values.size != expected:
        raise DimensionError(f"Channel dump {path} holds {values.size} entries, expected {expected}")

    stacks = []
    offset = 0
    for M_l in (M1, M2):
        n = M_rs * M_l
        H = np.stack([values[offset + k * n: offset + (k + 1) * n].reshape((M_rs, M_l), order="F")
                      for k in range(K)], axis=0)
        offset += K * n
        stacks.append(H)
    seed = None if meta.get("seed") in (None, "None") else int(meta["seed"])
    return ChannelSet(H=(stacks[0], stacks[1]), sigma2_rs=float(meta.get("sigma2_rs", 0.0)),
                      sigma2_ue=float(meta.get("sigma2_ue", 0.0)), seed=seed)
