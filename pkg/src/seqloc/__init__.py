"""Training-free indoor tracking with rank-similarity Wifi sequences and dead reckoning."""

__version__ = "0.1.0"
