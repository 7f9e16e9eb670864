"""Numerical verification of Killing and *-Killing 2-forms in dimension four."""

__version__ = "0.1.0"
