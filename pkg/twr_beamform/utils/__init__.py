"""Utility modules for the TWR beamforming toolkit."""
from twr_beamform.utils.logging_config import get_logger, get_trial_logger
