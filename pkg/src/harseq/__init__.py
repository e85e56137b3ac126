"""Activity recognition from binary smart-home sensor streams."""

__version__ = "0.1.0"
