"""Relay and terminal beamforming designers."""
