"""Kneading theory for systems of strictly monotone interval maps."""

__version__ = "0.1.0"
