"""Ambiguity- and loss-aversion sensors for red-team behavioral logs."""

__version__ = "0.1.0"
