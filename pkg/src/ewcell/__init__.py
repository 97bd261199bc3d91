"""Electrowinning cell simulator and streamline visualization backend."""

__version__ = "0.1.0"
