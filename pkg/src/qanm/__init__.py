"""Quantum asymptotic numerical method: Taylor-series path following with
emulated quantum linear solvers."""

__version__ = "0.1.0"
