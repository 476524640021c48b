"""Structured radiographic feature quantification and transparent KL grading."""

__version__ = "0.1.0"
