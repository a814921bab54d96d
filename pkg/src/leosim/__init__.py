"""Stochastic-geometry simulator and analytic toolkit for dense LEO constellations."""

__version__ = "0.1.0"
