"""Offline figures from stozak simulation outputs (strictly read-only)."""

__version__ = "0.1.0"
