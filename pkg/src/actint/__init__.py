"""Actionable interpretation of black-box time-series classifiers."""

__version__ = "0.1.0"
