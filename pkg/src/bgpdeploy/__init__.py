"""Simulate BGP defensive policies against routing attacks under varied deployments."""

__version__ = "0.1.0"
