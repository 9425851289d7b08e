"""Rates and coded BER of multidimensional constellations with bit-wise receivers."""

__version__ = "0.1.0"
