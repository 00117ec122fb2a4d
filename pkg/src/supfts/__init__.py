"""Sup-norm inference for functional time series."""

__version__ = "0.1.0"
