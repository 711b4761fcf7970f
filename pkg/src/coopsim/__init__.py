"""Adaptive mechanism design and gradual tit-for-tat in social dilemmas."""

__version__ = "0.1.0"
