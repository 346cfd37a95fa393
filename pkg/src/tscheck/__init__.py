"""Consistency analysis for Traffic Sequence Chart specifications."""

__version__ = "0.1.0"
