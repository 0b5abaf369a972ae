"""Numerical certification of generalized eigenfunctions via Shnol-type criteria."""

__version__ = "0.1.0"
