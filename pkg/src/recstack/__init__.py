"""Recursive ensemble stacking with scheduled feature compression and blurred pruning."""

__version__ = "0.1.0"
