"""Numerical workbench for Bochner-Riesz means, Stein square functions and
radial Fourier multipliers."""
__version__ = "0.1.0"
