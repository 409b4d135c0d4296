"""Relay amplification-matrix design for MIMO-OFDM two-way relaying."""
from twr_beamform.utils.logging_config import get_logger, get_trial_logger

__version__ = "0.1.0"
