"""Figure rendering for coopsim experiment logs."""

__version__ = "0.1.0"
