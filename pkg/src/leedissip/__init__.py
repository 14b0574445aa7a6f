"""Intrinsic dissipation of the unstable Lee model at desk scale."""

__version__ = "0.1.0"
