"""Numerical laboratory for the spectral restriction problem on the Heisenberg nilmanifold."""
__version__ = "0.1.0"
