"""Experiment presets, Monte Carlo sweeps and CSV output."""
