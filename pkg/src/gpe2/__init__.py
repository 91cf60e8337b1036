"""Spectral laboratory for two-component Gross-Pitaevskii systems with Rabi coupling."""

__version__ = "0.1.0"
