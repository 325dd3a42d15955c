"""Limiting spectral distributions of high-dimensional covariation matrices."""

__version__ = "0.1.0"
