"""Windowed graph + GRU anomaly detection for CAN bus traffic."""

__version__ = "0.1.0"
