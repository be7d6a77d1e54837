"""Numerical companion for spatial L^p UHF algebras built from systems of similarities."""

__version__ = "0.1.0"
