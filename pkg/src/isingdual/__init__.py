"""Weakly dual Ising models on CSS pairs: exact oracles, bounds, tilings and Monte Carlo."""

__version__ = "0.1.0"
