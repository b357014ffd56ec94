"""Streaming subspace estimation from incomplete data and its high-dimensional ODE limits."""

__version__ = "0.1.0"
