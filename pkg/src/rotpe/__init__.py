"""Pseudo-spectral laboratory for the rotating inviscid primitive equations on the unit torus."""

__version__ = "0.1.0"
