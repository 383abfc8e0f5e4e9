"""Balanced random survival forests for right-censored data."""

__version__ = "0.1.0"
