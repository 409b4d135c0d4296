"""
Scenario presets for the four experiment shapes.

Presets run at desk scale (M_rs=16, 50 trials) unless ``full`` is requested,
which restores the 64-antenna relay and the default trial count.
"""
from typing import Any, Dict

from twr_beamform.utils.errors import ConfigError

DESK_SCALE: Dict[str, Any] = {"m_rs": 16, "trials": 50}
FULL_SCALE: Dict[str, Any] = {"m_rs": 64, "trials": 200}

PRESETS: Dict[str, Dict[str, Any]] = {
    # SE vs SNR of the fully-digital designs for Ns = 1..4
    "fig1a": {
        "methods": ["anomax", "rr", "err"],
        "ns_values": [1, 2, 3, 4],
        "r": 2,
        "k": 1,
    },
    # ERR-ANOMAX SE vs R at 25 dB
    "fig1b": {
        "methods": ["err"],
        "snr_db_grid": [25.0],
        "r_values": [1, 2, 3, 4, 5, 6],
        "ns": 4,
        "k": 1,
    },
    # HAD factorizations of both fully-digital targets next to their FD references
    "fig2a": {
        "methods": ["rr", "err", "had_hosvd", "had_altmax"],
        "had_target_values": ["err", "rr"],
        "n_rs": 8,
        "ns": 4,
    },
    # RF-chain and subcarrier sweeps of the HAD methods
    "fig2b": {
        "methods": ["err", "had_hosvd", "had_altmax"],
        "n_rs_values": [4, 8],
        "k_values": [32, 64],
        "ns": 4,
    },
}

DESCRIPTIONS: Dict[str, str] = {
    "fig1a": "FD relays (K=1): SE vs SNR, Ns in {1,2,3,4}",
    "fig1b": "ERR-ANOMAX (K=1): SE vs R in {1..6} at SNR 25 dB",
    "fig2a": "HAD relays (HOSVD, AltMax) on ERR and RR targets: SE vs SNR",
    "fig2b": "HAD relays: SE vs SNR for N_rs in {4,8}, K in {32,64}",
}


def preset_values(name: str, full: bool = False) -> Dict[str, Any]:
    """Flat key/value mapping of a preset at the requested scale."""
    if name not in PRESETS:
        raise ConfigError(f"Unknown preset '{name}' (available: {', '.join(sorted(PRESETS))})", ["preset"])
    values = dict(FULL_SCALE if full else DESK_SCALE)
    values.update(PRESETS[name])
    return values
