"""Threshold Market – three-state social-impact market simulator and loss-recurrence analysis."""

__version__ = "1.0.0"
