"""Quantitative equational reasoning over generalized metric spaces."""

__version__ = "0.1.0"
