"""Exact and numerical tools for quadric nets of Feynman graphs."""

__version__ = "0.1.0"
