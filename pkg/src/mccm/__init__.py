"""Mandelbrot canonical cascades: dimensions, simulation and Fourier analysis."""

__version__ = "0.1.0"
