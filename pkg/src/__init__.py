"""Blaschke product cocycles and their transfer operators."""

__version__ = "0.1.0"
