"""
Link-level evaluation of a relay design: two-phase signal simulation with
self-interference subtraction, spectral efficiency in matrix and closed form,
and one Monte Carlo trial over every configured method.
"""
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np
import numpy.typing as npt
import scipy.linalg

from twr_beamform.channel.channel_model import generate_channel_set
from twr_beamform.designers.fd_relay import design_fd_relay, normalize_relay_gain
from twr_beamform.designers.had_relay import (
    compose_had,
    had_altmax,
    had_hosvd,
    had_hosvd_ls,
    stack_fd_tensor,
)
from twr_beamform.designers.terminal import design_beams, effective_channel, noise_covariance
from twr_beamform.models.channel import ChannelSet
from twr_beamform.models.design import AltMaxOptions, FdRelayDesign, HadRelayDesign, LinkBeams, TerminalBeams
from twr_beamform.models.experiment import FD_METHODS, HAD_METHODS, ExperimentConfig
from twr_beamform.utils.errors import NumericalError
from twr_beamform.utils.logging_config import get_logger, get_trial_logger

logger = get_logger(__name__)
trial_logger = get_trial_logger("Trial")

Matrix = npt.NDArray[np.complex128]

# Relative relay-power drift tolerated after the second normalization pass
DRIFT_TOL = 0.01


def snr_to_noise(snr_db: float) -> float:
    """SNR = 1 / sigma^2."""
    return float(10.0 ** (-snr_db / 10.0))


# ---------------------------------------------------------------------------
# Signal simulation
# ---------------------------------------------------------------------------

@dataclass
class ReceivedSignals:
    """Phase-2 signals at one mobile station after decoding."""
    y: npt.NDArray[np.complex128]
    y_si: npt.NDArray[np.complex128]
    y_ds: npt.NDArray[np.complex128]
    noise: npt.NDArray[np.complex128]
    z: npt.NDArray[np.complex128]
    s_partner: npt.NDArray[np.complex128]  # symbols sent by the other MS


def _cn(rng: np.random.Generator, n: int, variance: float) -> npt.NDArray[np.complex128]:
    return np.sqrt(variance / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def simulate_two_phase(
    ch: ChannelSet,
    G: Matrix,
    beams: TerminalBeams,
    rng: np.random.Generator,
    k: int,
) -> List[ReceivedSignals]:
    """
    Phase 1: both MSs transmit, x = H1 F1 s1 + H2 F2 s2 + n_rs.
    Phase 2: the relay forwards G x; MS l decodes y = W^H H_l^T G x + W^H n_l and
    subtracts its own echo to obtain z = y - y_si.
    """
    H = [ch.uplink(1, k), ch.uplink(2, k)]
    F = [beams.F[0][k], beams.F[1][k]]
    W = [beams.W[0][k], beams.W[1][k]]
    s = [_cn(rng, F[l].shape[1], 1.0) for l in range(2)]
    n_rs = _cn(rng, ch.M_rs, ch.sigma2_rs)
    n_ue = [_cn(rng, H[l].shape[1], ch.sigma2_ue) for l in range(2)]

    x = H[0] @ F[0] @ s[0] + H[1] @ F[1] @ s[1] + n_rs
    received = []
    for l in range(2):
        other = 1 - l
        Wh = W[l].conj().T
        y = Wh @ (H[l].T @ G @ x) + Wh @ n_ue[l]
        y_si = Wh @ effective_channel(H[l], G, H[l]) @ F[l] @ s[l]
        y_ds = Wh @ effective_channel(H[l], G, H[other]) @ F[other] @ s[other]
        noise = Wh @ (H[l].T @ G @ n_rs + n_ue[l])
        received.append(ReceivedSignals(y=y, y_si=y_si, y_ds=y_ds, noise=noise, z=y - y_si, s_partner=s[other]))
    return received


# ---------------------------------------------------------------------------
# Spectral efficiency
# ---------------------------------------------------------------------------

def spectral_efficiency_general(H_bar_ds, F_ds, W, Phi, half_prelog: bool = True) -> float:
    """
    1/2 log2 det(I + (W^H Phi W)^{-1} W^H H F F^H H^H W), evaluated through the
    Cholesky factor of W^H Phi W.
    """
    Wh = np.asarray(W).conj().T
    noise = Wh @ Phi @ np.asarray(W)
    noise = 0.5 * (noise + noise.conj().T)
    try:
        L = scipy.linalg.cholesky(noise, lower=True)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Decoded noise covariance is singular: {e}") from e
    signal = Wh @ np.asarray(H_bar_ds) @ np.asarray(F_ds)
    whitened = scipy.linalg.solve_triangular(L, signal, lower=True)
    sv = scipy.linalg.svdvals(whitened) if whitened.size else np.zeros(0)
    prelog = 0.5 if half_prelog else 1.0
    return max(prelog * float(np.sum(np.log2(1.0 + sv ** 2))), 0.0)


def spectral_efficiency_closed(lambda_eff, p, half_prelog: bool = True) -> float:
    """1/2 sum_i log2(1 + lambda_i^2 p_i)."""
    lam = np.asarray(lambda_eff, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    prelog = 0.5 if half_prelog else 1.0
    return prelog * float(np.sum(np.log2(1.0 + lam ** 2 * p)))


# ---------------------------------------------------------------------------
# Relay normalization and terminal design
# ---------------------------------------------------------------------------

def isotropic_covariance(ch: ChannelSet, k: int, P_ue: float, include_noise: bool = True) -> Matrix:
    """Relay receive covariance when each MS spreads P_ue evenly over its antennas."""
    Cx = np.zeros((ch.M_rs, ch.M_rs), dtype=np.complex128)
    for l in (1, 2):
        H = ch.uplink(l, k)
        Cx += (P_ue / ch.M(l)) * (H @ H.conj().T)
    if include_noise:
        Cx += ch.sigma2_rs * np.eye(ch.M_rs)
    return Cx


def precoded_covariance(ch: ChannelSet, k: int, F: Sequence[Matrix]) -> Matrix:
    """Relay receive covariance sum_l H_l F_l F_l^H H_l^H + sigma2_rs I."""
    Cx = ch.sigma2_rs * np.eye(ch.M_rs, dtype=np.complex128)
    for l in (1, 2):
        HF = ch.uplink(l, k) @ F[l - 1]
        Cx += HF @ HF.conj().T
    return Cx


def design_terminal_links(
    ch: ChannelSet, G: Matrix, k: int, Ns: int, P_ue: float, literal_waterfill: bool = False
) -> List[LinkBeams]:
    """Beams of the links received by MS 1 (index 0) and MS 2 (index 1)."""
    links = []
    for rx, tx in ((1, 2), (2, 1)):
        H_rx = ch.uplink(rx, k)
        H_bar = effective_channel(H_rx, G, ch.uplink(tx, k))
        Phi = noise_covariance(H_rx, G, ch.sigma2_rs, ch.sigma2_ue)
        links.append(design_beams(H_bar, Phi, Ns, P_ue, literal_waterfill))
    return links


def design_terminal_beams(
    ch: ChannelSet, relay: Sequence[Matrix], Ns: int, P_ue: float, literal_waterfill: bool = False
) -> TerminalBeams:
    """Beams of both MSs on every subcarrier for already-normalized relay matrices."""
    beams = TerminalBeams.empty(ch.K)
    for k in range(ch.K):
        for rx, link in enumerate(design_terminal_links(ch, relay[k], k, Ns, P_ue, literal_waterfill)):
            beams.set_link(rx, k, link)
    return beams


def normalize_two_pass(
    ch: ChannelSet, G: Matrix, k: int, Ns: int, P_rs: float, P_ue: float, literal_waterfill: bool = False
):
    """
    Pass 1 normalizes G under isotropic MS transmission and designs beams; pass 2
    renormalizes with the covariance those precoders actually produce, and the
    beams are redesigned for the final matrix.

    Returns:
        Tuple of (normalized G, beta, links)
    """
    G1, beta1 = normalize_relay_gain(G, isotropic_covariance(ch, k, P_ue), P_rs)
    links = design_terminal_links(ch, G1, k, Ns, P_ue, literal_waterfill)
    F = [links[1].F, links[0].F]  # precoders of MS 1 and MS 2
    G2, beta2 = normalize_relay_gain(G, precoded_covariance(ch, k, F), P_rs)
    links = design_terminal_links(ch, G2, k, Ns, P_ue, literal_waterfill)

    F = [links[1].F, links[0].F]
    power = float(np.real(np.trace(G2 @ precoded_covariance(ch, k, F) @ G2.conj().T)))
    drift = abs(power / P_rs - 1.0)
    trial_logger.debug(f"k={k}: beta pass1={beta1:.6g}, pass2={beta2:.6g} ({abs(beta2 - beta1) / beta1:.2%} change)")
    if drift > DRIFT_TOL:
        trial_logger.debug(f"k={k}: relay power drifts {drift:.2%} from P_rs under the redesigned precoders")
    return G2, beta2, links


def evaluate_relay(ch: ChannelSet, relay: Sequence[Matrix], config: ExperimentConfig) -> float:
    """
    Total SE of a relay design: sum over both MSs of the per-subcarrier average.
    ``relay`` holds the unnormalized matrix of every subcarrier.
    """
    per_ms = np.zeros((2, ch.K))
    for k in range(ch.K):
        G, _, links = normalize_two_pass(
            ch, relay[k], k, config.ns, config.p_rs, config.p_ue, config.literal_waterfill
        )
        for idx, (rx, tx) in enumerate(((1, 2), (2, 1))):
            H_rx = ch.uplink(rx, k)
            H_bar = effective_channel(H_rx, G, ch.uplink(tx, k))
            Phi = noise_covariance(H_rx, G, ch.sigma2_rs, ch.sigma2_ue)
            per_ms[idx, k] = spectral_efficiency_general(
                H_bar, links[idx].F, links[idx].W, Phi, config.half_prelog
            )
    return float(np.sum(np.mean(per_ms, axis=1)))


# ---------------------------------------------------------------------------
# Monte Carlo trial
# ---------------------------------------------------------------------------

def altmax_options(config: ExperimentConfig, seed: int) -> AltMaxOptions:
    return AltMaxOptions(
        tol=config.altmax_tol,
        max_iter=config.altmax_max_iter,
        deflation_strength=1.0 if config.altmax_deflation else 0.0,
        outer_refine=config.outer_refine,
        seed=seed,
    )


def _fd_target_tensor(ch: ChannelSet, design: FdRelayDesign, P_rs: float, P_ue: float):
    """Stack the FD matrices after scaling each to the relay power under signal-only isotropic input."""
    slices = []
    for k in range(ch.K):
        Cx = isotropic_covariance(ch, k, P_ue, include_noise=False)
        G, _ = normalize_relay_gain(design.G[k], Cx, P_rs)
        slices.append(G)
    return stack_fd_tensor(slices)


def _had_design(method: str, Gt, n_rs: int, opts: AltMaxOptions) -> HadRelayDesign:
    if method == "had_hosvd":
        return had_hosvd(Gt, n_rs)
    if method == "had_hosvd_ls":
        return had_hosvd_ls(Gt, n_rs)
    return had_altmax(Gt, n_rs, opts)


def _peak(row: Sequence[float]) -> float:
    finite = [v for v in row if np.isfinite(v)]
    return max(finite) if finite else float("nan")


def run_trial(config: ExperimentConfig, seed: int) -> Dict[str, List[float]]:
    """
    One channel realization evaluated for every method at every SNR of the grid.

    Returns:
        Mapping of method label to the total SE per SNR point (NaN when the
        method failed on this realization)
    """
    rng = np.random.default_rng(seed)
    base = generate_channel_set(
        rng, config.m_rs, config.m1, config.m2, config.k, config.l, config.d,
        unit_energy=config.unit_energy, seed=seed,
    )
    nan_row = [float("nan")] * len(config.snr_db_grid)
    outcome: Dict[str, List[float]] = {}

    # Relay matrices (unnormalized) per method; they do not depend on the noise level
    relays: Dict[str, List[Matrix]] = {}
    fd_designs: Dict[str, FdRelayDesign] = {}

    def fd_design(method: str) -> FdRelayDesign:
        if method not in fd_designs:
            fd_designs[method] = design_fd_relay(base, method, config.ns, config.r)
        return fd_designs[method]

    for method in config.methods:
        label = config.method_label(method)
        try:
            if method in FD_METHODS:
                relays[label] = fd_design(method).G
            elif method in HAD_METHODS:
                Gt = _fd_target_tensor(base, fd_design(config.had_target), config.p_rs, config.p_ue)
                design = _had_design(method, Gt, config.n_rs, altmax_options(config, seed))
                relays[label] = [compose_had(design, k) for k in range(design.K)]
                trial_logger.debug(
                    f"seed={seed} {label}: reconstruction error "
                    f"{design.diagnostics.get('reconstruction_error', float('nan')):.4g}"
                )
        except Exception as e:
            logger.warning(f"seed={seed}: design of {label} failed, recording NaN ({type(e).__name__}: {e})")
            outcome[label] = list(nan_row)

    for label, relay in relays.items():
        row = []
        for snr_db in config.snr_db_grid:
            sigma2 = snr_to_noise(snr_db)
            ch = base.with_noise(sigma2, sigma2)
            try:
                row.append(evaluate_relay(ch, relay, config))
            except Exception as e:
                logger.warning(
                    f"seed={seed} {label} at {snr_db} dB failed, recording NaN ({type(e).__name__}: {e})"
                )
                row.append(float("nan"))
        outcome[label] = row

    summary = ", ".join(f"{label}={_peak(row):.3f}" for label, row in outcome.items())
    trial_logger.info(
        f"seed={seed} K={config.k} Ns={config.ns} N_rs={config.n_rs} R={config.r}: peak SE {summary}"
    )
    return {config.method_label(m): outcome[config.method_label(m)] for m in config.methods}
