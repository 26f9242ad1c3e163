"""Spectral criteria for the asymptotics of orbits of x(n+1) = B x(n) + y(n)."""

__version__ = "0.1.0"
