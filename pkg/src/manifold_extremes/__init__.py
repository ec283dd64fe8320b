"""Simulation and extreme-value diagnostics for Gaussian fields on rescaled manifolds."""

__version__ = "0.1.0"
