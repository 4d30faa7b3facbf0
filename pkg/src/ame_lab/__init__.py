"""Absolutely maximally entangled qudit states and the protocols built on them."""

__version__ = "0.1.0"
