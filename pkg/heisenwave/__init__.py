"""Spectral simulator for the fractional damped wave equation on the Heisenberg group."""

__version__ = "0.1.0"
